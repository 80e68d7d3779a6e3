#pragma once

// A family of demand types, markets over them, and the seller's optimal price.
//
// Reduced coordinates drop the first declared type: a market mu over n types is
// represented by (mu_2, ..., mu_n) and mu_1 = 1 - sum. Every gradient and
// Hessian in the library lives in these coordinates.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "segwelfare/demand.hpp"
#include "segwelfare/tolerances.hpp"

namespace segwelfare {

class Family {
 public:
  /// Validates each curve and caches monopoly prices. Throws NoInteriorRoot
  /// when a curve has no interior monopoly price; other Assumption-1 failures
  /// are recorded in the per-type reports.
  explicit Family(std::vector<DemandSpec> specs, const Tolerances& tol = default_tolerances());

  std::size_t size() const { return specs_.size(); }
  const DemandSpec& spec(std::size_t i) const { return specs_.at(i); }
  const std::vector<DemandSpec>& specs() const { return specs_; }
  double monopoly_price(std::size_t i) const { return prices_.at(i); }
  const ValidationReport& validation(std::size_t i) const { return reports_.at(i); }
  const Tolerances& tolerances() const { return tol_; }

  /// Lowest and highest monopoly price; ties go to the lower index.
  std::size_t low_type() const { return low_; }
  std::size_t high_type() const { return high_; }
  PriceInterval price_range() const { return {prices_[low_], prices_[high_]}; }

  /// Cached result of check_partial_inclusion.
  bool partial_inclusion() const { return partial_inclusion_; }

  /// The sub-family of the given types, in the given order.
  Family subfamily(const std::vector<std::size_t>& types) const;

 private:
  std::vector<DemandSpec> specs_;
  std::vector<double> prices_;
  std::vector<ValidationReport> reports_;
  Tolerances tol_;
  std::size_t low_ = 0;
  std::size_t high_ = 0;
  bool partial_inclusion_ = true;
};

/// A probability vector over the types of a family.
class Market {
 public:
  /// Entries above -1e-14 are clamped to zero; throws SimplexViolation when the
  /// vector is not a probability vector within `simplex_tol`.
  explicit Market(Eigen::VectorXd mu, double simplex_tol = 1e-12);

  static Market point_mass(std::size_t n, std::size_t i);
  static Market uniform(std::size_t n);
  static Market from_reduced(const Eigen::VectorXd& reduced, double simplex_tol = 1e-12);
  /// Two types with weight `w` on the second.
  static Market binary(double w);

  const Eigen::VectorXd& mu() const { return mu_; }
  double operator[](std::size_t i) const { return mu_[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const { return static_cast<std::size_t>(mu_.size()); }
  Eigen::VectorXd reduced() const { return mu_.tail(mu_.size() - 1); }

 private:
  Eigen::VectorXd mu_;
};

enum class InclusionKind { FullExclusion, FullInclusion };

struct InclusionViolation {
  std::size_t type;   // the type whose monopoly price is tested
  std::size_t other;  // the type whose support fails to contain it
  InclusionKind kind;
};

struct PartialInclusionReport {
  bool holds = true;
  std::vector<InclusionViolation> violations;
};

/// Tests p_lo(other) <= p*(type) <= p_hi(other) for every ordered pair.
PartialInclusionReport check_partial_inclusion(const Family& family);

enum class PricingMode { FirstOrder, GridFallback };

struct PriceSolution {
  double price = 0.0;
  bool used_grid = false;
  bool tie_break_bound = false;  // another price far from the optimum earns the same revenue
  double foc_residual = 0.0;     // sum_i mu_i R_p at the price, when it is defined
};

/// The seller's optimal price. Under partial inclusion this is the root of
/// expected marginal revenue between the extreme monopoly prices. Otherwise
/// throws PartialInclusionViolated, unless `mode` is GridFallback, in which
/// case expected revenue is maximized over a grid with local refinement and
/// ties go to the lowest price.
PriceSolution solve_price(const Family& family, const Market& m,
                          PricingMode mode = PricingMode::FirstOrder);
double optimal_price(const Family& family, const Market& m,
                     PricingMode mode = PricingMode::FirstOrder);

/// Price, its derivatives in reduced coordinates, and the revenue stacks of
/// every type at that price.
struct PriceLocal {
  double price = 0.0;
  std::vector<DerivStack> revenue;  // per type, at `price`
  double e_rpp = 0.0;               // E_mu[R_pp]
  double e_rppp = 0.0;              // E_mu[R_ppp]
  Eigen::VectorXd grad;             // length n - 1
  Eigen::VectorXd delta_rpp;        // R_pp(theta_i) - R_pp(theta_1), i = 2..n
  Eigen::MatrixXd hess;             // (n - 1) x (n - 1)
};

/// Throws DegenerateCurvature when |E[R_pp]| < tol_conc.
PriceLocal price_local(const Family& family, const Market& m);
Eigen::VectorXd price_gradient(const Family& family, const Market& m);
Eigen::MatrixXd price_hessian(const Family& family, const Market& m);

}  // namespace segwelfare
