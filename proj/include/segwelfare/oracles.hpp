#pragma once

// Brute-force cross-checks. Nothing here reuses the closed forms it is meant
// to check: prices come from a plain bisection (or a dense grid), surplus from
// the demand curve directly.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "segwelfare/market.hpp"
#include "segwelfare/monotonicity.hpp"
#include "segwelfare/welfare.hpp"

namespace segwelfare {

struct OracleConfig {
  double fd_step = 1e-4;
  std::size_t scan_points = 201;
  std::size_t search_trials = 500;
  std::uint64_t seed = 0;
};

/// Seller's price by bisection on expected marginal revenue D + p D_p, or by a
/// dense grid with golden-section polish when `brute` is set.
double oracle_price(const Family& family, const Market& m, bool brute = false);
double oracle_value(const Family& family, const Market& m, WelfareWeight w, bool brute = false);

Eigen::VectorXd fd_price_gradient(const Family& family, const Market& m, double h);
Eigen::MatrixXd fd_price_hessian(const Family& family, const Market& m, double h);

/// Central second differences of the value in reduced coordinates. Throws
/// BoundaryTooClose if a coordinate is below 2h.
Eigen::MatrixXd fd_value_hessian(const Family& family, const Market& m, WelfareWeight w,
                                 const OracleConfig& cfg = {});

struct JacobiResult {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns
  int sweeps = 0;
};

/// Classical Jacobi rotations until the off-diagonal norm is below 1e-12 of
/// the matrix norm. Throws NotSymmetric.
JacobiResult jacobi_eigen(const Eigen::MatrixXd& a);

struct ConcavityScan {
  bool concave = true;
  bool convex = true;
  std::optional<double> violation_mu;  // weight on the second type
  std::vector<double> values;
};

/// W on an even grid of the weight on the second type, judged by second
/// differences with a magnitude-scaled tolerance.
ConcavityScan concavification_scan(const Family& family2, WelfareWeight w,
                                   const OracleConfig& cfg = {});

struct Witness {
  Segmentation chain;
  double delta;  // V(chain) - V(no information)
  std::size_t trial;
};

struct WitnessResult {
  std::optional<Witness> improving;
  std::optional<Witness> worsening;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  bool brute_pricing = false;
  double tolerance = 0.0;
};

/// Random chains of one to three symmetric splits from the no-information
/// segmentation of `prior`. Trial k draws from a stream seeded by (seed, k),
/// so results replay exactly.
WitnessResult witness_search(const Family& family, const Market& prior, WelfareWeight w,
                             const OracleConfig& cfg = {});

struct StepLimitRow {
  double eps;
  bool partial_inclusion;
  MonotonicityVerdict verdict;
};

struct StepLimitTable {
  std::vector<StepLimitRow> rows;
  std::optional<double> crossover;  // largest eps at which inclusion fails
};

/// Two smoothed unit demands valued at `values`, with ramp width eps.
StepLimitTable step_limit_regression(const std::vector<double>& eps_list,
                                     std::array<double, 2> values = {1.0, 1.25},
                                     double alpha = 0.5);

}  // namespace segwelfare
