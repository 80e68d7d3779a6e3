#pragma once

// Hessian of the value function, its two nonzero eigenpairs, and bounds on
// the welfare effect of information over the whole simplex.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "segwelfare/market.hpp"
#include "segwelfare/welfare.hpp"

namespace segwelfare {

struct Eigenpairs {
  double lambda_hi = 0.0;
  double lambda_lo = 0.0;
  Eigen::VectorXd v_hi;  // unnormalized; zero when undefined
  Eigen::VectorXd v_lo;
  bool hi_defined = false;
  bool lo_defined = false;
};

/// lambda = g.x +/- |g||x|, v = g|x| +/- |g|x.
Eigenpairs eigenpairs(const Eigen::VectorXd& grad_p, const Eigen::VectorXd& x);

struct CurvatureReport {
  Market market;
  double price = 0.0;
  Eigen::VectorXd grad_p;
  Eigen::VectorXd x_vec;
  Eigen::MatrixXd hessian;
  double lambda_hi = 0.0;
  double lambda_lo = 0.0;
  Eigen::VectorXd v_hi;
  Eigen::VectorXd v_lo;
  bool hi_defined = false;
  bool lo_defined = false;
};

Eigen::VectorXd x_vector(const Family& family, const Market& m, WelfareWeight w);
Eigen::MatrixXd hessian_w(const Family& family, const Market& m, WelfareWeight w);
CurvatureReport curvature_report(const Family& family, const Market& m, WelfareWeight w);

/// The same Hessian assembled from its economic components.
struct HessianTerms {
  Eigen::MatrixXd within;     // E[V_pp] grad grad^T
  Eigen::MatrixXd cross;      // dV_p grad^T + grad dV_p^T
  Eigen::MatrixXd curvature;  // E[V_p] Hess p
  Eigen::MatrixXd total;
};
HessianTerms hessian_terms(const Family& family, const Market& m, WelfareWeight w);

struct BoundsOptions {
  std::size_t resolution = 200;     // lattice steps per unit, n <= 3
  std::size_t sobol_points = 4096;  // n > 3
  std::size_t polish_starts = 4;    // n > 3
  unsigned threads = 1;
  std::optional<Market> prior;      // for the magnitude bounds
  bool keep_samples = false;
};

struct LatticeSample {
  Eigen::VectorXd mu;
  double lambda_hi;
  double lambda_lo;
};

struct BoundsReport {
  double min_lambda_lo = 0.0;
  double max_lambda_hi = 0.0;
  double lower_rate = 0.0;  // min lambda_lo / 2
  double upper_rate = 0.0;  // max lambda_hi / 2
  Eigen::VectorXd arg_min;
  Eigen::VectorXd arg_max;
  std::optional<double> magnitude_lower;
  std::optional<double> magnitude_upper;
  std::size_t evaluations = 0;
  std::string method;
  std::vector<LatticeSample> samples;
};

/// Extreme eigenvalues over the simplex: a full lattice for n <= 3, Sobol
/// points plus vertices and a Nelder-Mead polish for larger n. Throws
/// PartialInclusionViolated.
BoundsReport global_bounds(const Family& family, WelfareWeight w, const BoundsOptions& opt = {});

struct Direction {
  Eigen::VectorXd v_best;  // unit, reduced coordinates
  Eigen::VectorXd v_worst;
  double gain = 0.0;
  double loss = 0.0;
  double t_max_best = 0.0;  // largest t with m +/- t v in the simplex
  double t_max_worst = 0.0;
};

/// Largest t keeping both m + t d and m - t d in the simplex.
double max_symmetric_step(const Market& m, const Eigen::VectorXd& reduced_direction);

/// Throws UndefinedDirection when both eigenvalues vanish.
Direction best_direction(const Family& family, const Market& m, WelfareWeight w);

struct FieldRow {
  Eigen::VectorXd mu;
  Eigen::VectorXd v_best;  // unit vectors; NaN when undefined
  Eigen::VectorXd v_worst;
  double lambda_hi;
  double lambda_lo;
};

/// Best and worst directions on the interior of a three-type lattice; markets
/// with a coordinate below 1e-3 are skipped. Throws WrongDimension.
std::vector<FieldRow> vector_field(const Family& family, WelfareWeight w, std::size_t resolution,
                                   unsigned threads = 1);

/// Columns mu_1..mu_n, vbest_2..n, vworst_2..n, lambda_hi, lambda_lo. With
/// `scale_by_eigenvalue` the arrows are multiplied by |lambda|.
void write_field_csv(std::ostream& os, const std::vector<FieldRow>& rows,
                     bool scale_by_eigenvalue = false);

}  // namespace segwelfare
