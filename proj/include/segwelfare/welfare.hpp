#pragma once

// Weighted surplus and segmentations.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "segwelfare/demand.hpp"
#include "segwelfare/market.hpp"

namespace segwelfare {

/// Weight alpha on consumer surplus and 1 - alpha on revenue.
struct WelfareWeight {
  explicit WelfareWeight(double alpha);
  double alpha;
};

double v_alpha(const DemandSpec& spec, double p, WelfareWeight w);

/// V^alpha and its price derivatives inside the support.
DerivStack v_alpha_derivs(const DemandSpec& spec, double p, WelfareWeight w);

/// W^alpha(mu): expected surplus of a market at the seller's price.
double value_function(const Family& family, const Market& m, WelfareWeight w,
                      PricingMode mode = PricingMode::FirstOrder);

/// Expected revenue at the seller's price.
double revenue_function(const Family& family, const Market& m,
                        PricingMode mode = PricingMode::FirstOrder);

struct Atom {
  double weight;
  Market market;
};

/// One symmetric two-child split of atom `atom` along `direction` (reduced
/// coordinates) by step `t`.
struct SplitRecord {
  std::size_t atom;
  Eigen::VectorXd direction;
  double t;
};

class Segmentation {
 public:
  /// Checks weights and Bayes plausibility against `prior`.
  Segmentation(std::vector<Atom> atoms, Market prior, double bayes_tol = 1e-10);

  static Segmentation no_information(const Market& prior);
  static Segmentation full_information(const Market& prior);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const Market& prior() const { return prior_; }
  std::size_t size() const { return atoms_.size(); }

  /// Atoms the lineage starts from, and the splits applied since.
  const std::vector<Atom>& base_atoms() const { return base_; }
  const std::vector<SplitRecord>& lineage() const { return lineage_; }

  /// True when `coarse` is known to be garbled from this segmentation: both
  /// share a base and coarse's lineage is a prefix of ours, coarse is the
  /// no-information segmentation of our prior, or we are full information.
  bool is_refinement_of(const Segmentation& coarse) const;

 private:
  friend Segmentation split_atom(const Segmentation&, std::size_t, const Eigen::VectorXd&, double);
  friend Segmentation epsilon_contract(const Segmentation&, const Market&, double);

  std::vector<Atom> atoms_;
  Market prior_;
  std::vector<Atom> base_;
  std::vector<SplitRecord> lineage_;
};

/// Replaces atom k by two half-weight atoms at mu_k -/+ t d (children stored at
/// k and k + 1). t = 0 returns the segmentation unchanged. Throws
/// SimplexViolation when a child leaves the simplex.
Segmentation split_atom(const Segmentation& s, std::size_t k, const Eigen::VectorXd& direction,
                        double t);

/// Moves every atom to eps mu + (1 - eps) prior. Lineage is carried along with
/// steps scaled by eps, so contracted chains stay comparable.
Segmentation epsilon_contract(const Segmentation& s, const Market& prior, double eps);

/// E_sigma ||mu||^2 over full coordinate vectors.
double information_size(const Segmentation& s);

double segmentation_value(const Family& family, const Segmentation& s, WelfareWeight w,
                          PricingMode mode = PricingMode::FirstOrder);
double segmentation_revenue(const Family& family, const Segmentation& s,
                            PricingMode mode = PricingMode::FirstOrder);

/// (V(fine) - V(coarse)) / (size(fine) - size(coarse)). Throws NotARefinement
/// or ZeroInformationGap.
double delta_v_rate(const Family& family, const Segmentation& fine, const Segmentation& coarse,
                    WelfareWeight w, PricingMode mode = PricingMode::FirstOrder);

}  // namespace segwelfare
