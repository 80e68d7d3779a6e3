#pragma once

// Classification of a family as information-monotonically bad (IMB), good
// (IMG), or neither, for a fixed welfare weight.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "segwelfare/market.hpp"
#include "segwelfare/welfare.hpp"

namespace segwelfare {

// Neutral: the test expression is flat within tolerance (for instance when all
// monopoly prices coincide), so information is both weakly bad and weakly good.
enum class Verdict { IMB, IMG, Neutral, NonMonotone };
enum class FailedCondition { None, PartialInclusion, Spanning, BinaryExpression };

std::string to_string(Verdict v);
std::string to_string(FailedCondition c);

struct ExpressionSample {
  double price;
  double value;
};

struct VerdictWitness {
  std::optional<std::array<double, 2>> rising;   // consecutive prices where the expression rises
  std::optional<std::array<double, 2>> falling;  // ... and where it falls
  std::optional<std::size_t> type;               // offending type index
  std::optional<double> residual;
};

struct MonotonicityVerdict {
  Verdict verdict = Verdict::NonMonotone;
  FailedCondition failed = FailedCondition::None;
  double alpha = 1.0;
  VerdictWitness witness;
  std::vector<ExpressionSample> diagnostics;
  double band = 0.0;  // tolerance applied to successive differences
  std::string note;

  bool imb() const { return verdict == Verdict::IMB || verdict == Verdict::Neutral; }
  bool img() const { return verdict == Verdict::IMG || verdict == Verdict::Neutral; }
};

/// The binary test expression at price p, for a two-type family. Types are
/// ordered by monopoly price, not by declaration. Throws
/// SignConditionViolated unless R_p(theta_L) <= 0 <= R_p(theta_H).
double binary_expression(const Family& family2, double p, WelfareWeight w);

/// Samples the expression on `grid_n` interior prices and checks its
/// monotonicity; decreasing means IMB, increasing IMG.
MonotonicityVerdict check_binary(const Family& family2, WelfareWeight w,
                                 std::size_t grid_n = 400);

struct SpanCoefficients {
  double f1 = 0.0;  // weight on D(., theta_L)
  double f2 = 0.0;  // weight on D(., theta_H)
  double unconstrained_f1 = 0.0;
  double unconstrained_f2 = 0.0;
  bool unconstrained_negative = false;
  double residual = 0.0;  // max |misfit| relative to the demand scale
};

struct SpanningFit {
  std::vector<SpanCoefficients> coeffs;  // per type
  double max_residual = 0.0;
  std::size_t worst_type = 0;
  bool any_unconstrained_negative = false;
};

/// Nonnegative least-squares fit of every demand by the two extreme-price
/// demands on [p*(theta_L), p*(theta_H)].
SpanningFit spanning_fit(const Family& family, std::size_t grid_n = 400);

/// Partial inclusion, then spanning, then the binary test on the two extreme
/// types. Never consumes a prior.
MonotonicityVerdict classify(const Family& family, WelfareWeight w, std::size_t grid_n = 400);

struct ThreeEffects {
  double mu = 0.0;  // weight on theta_H
  double price = 0.0;
  double within = 0.0;
  double cross = 0.0;
  double curvature = 0.0;
  double total = 0.0;
};

/// The three addends of W''(mu) for a binary market, mu being the weight on
/// the higher-monopoly-price type.
ThreeEffects three_effects(const Family& family2, double mu_high, WelfareWeight w);

struct ConditionCheck {
  std::string name;
  bool img_ok = true;
  bool imb_ok = true;
  double worst_price = 0.0;
};

struct SufficientConditions {
  bool img_ok = true;
  bool imb_ok = true;
  std::vector<ConditionCheck> per_condition;
};

/// Same-sign conditions on the three effects, checked on interior prices.
SufficientConditions sufficient_conditions(const Family& family2, WelfareWeight w,
                                           std::size_t grid_n = 400);

struct AlphaVerdict {
  double alpha;
  MonotonicityVerdict verdict;
};

/// Classifies at each alpha (ascending) and throws CorollaryViolation when IMG
/// at some alpha is not inherited by smaller alphas, or IMB by larger ones.
std::vector<AlphaVerdict> alpha_monotone_scan(const Family& family,
                                              const std::vector<double>& alphas,
                                              std::size_t grid_n = 400);

/// (2 alpha - 1) p + alpha p D'(p) / R''(p) for the base curve of an
/// a D + b family. Throws DegenerateCurvature when R'' vanishes.
double affine_family_expression(const DemandSpec& base, double p, WelfareWeight w);

struct AffineVerdict {
  MonotonicityVerdict verdict;
  std::optional<double> alpha_hat;  // known switching weight for the density base
};

/// Shortcut for families whose members all share one AffineOfBase base:
/// increasing expression means IMB, decreasing IMG. Throws InvalidParameter
/// for other families.
AffineVerdict classify_affine(const Family& family, WelfareWeight w, std::size_t grid_n = 400);

}  // namespace segwelfare
