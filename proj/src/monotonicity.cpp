#include "segwelfare/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "segwelfare/errors.hpp"

namespace segwelfare {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::IMB: return "IMB";
    case Verdict::IMG: return "IMG";
    case Verdict::Neutral: return "Neutral";
    case Verdict::NonMonotone: return "NonMonotone";
  }
  return "Unknown";
}

std::string to_string(FailedCondition c) {
  switch (c) {
    case FailedCondition::None: return "none";
    case FailedCondition::PartialInclusion: return "PartialInclusion";
    case FailedCondition::Spanning: return "Spanning";
    case FailedCondition::BinaryExpression: return "BinaryExpression";
  }
  return "Unknown";
}

namespace {

struct Pair {
  std::size_t lo;
  std::size_t hi;
};

Pair binary_pair(const Family& f) {
  if (f.size() != 2) {
    throw Error(ErrorCode::WrongDimension, "expected a two-type family, got " +
                                               std::to_string(f.size()) + " types");
  }
  if (f.low_type() == f.high_type()) return {0, 1};
  return {f.low_type(), f.high_type()};
}

std::vector<double> interior_grid(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = a + (b - a) * static_cast<double>(k + 1) / static_cast<double>(n + 1);
  }
  return g;
}

std::vector<double> closed_grid(double a, double b, std::size_t n) {
  if (n < 2 || !(b > a)) return {a};
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  g.back() = b;
  return g;
}

bool degenerate_interval(const PriceInterval& I) {
  return !(I.hi - I.lo > 1e-12 * std::max(1.0, std::abs(I.hi)));
}

// Decreasing samples read as IMB, increasing as IMG, for both the binary
// expression and (with the sign flipped) the affine-family expression.
void judge_samples(MonotonicityVerdict& out, double tol_rel, bool increasing_is_imb) {
  const auto& s = out.diagnostics;
  double scale = 0.0;
  for (const auto& e : s) scale = std::max(scale, std::abs(e.value));
  out.band = tol_rel * std::max(scale, 1e-300);
  double rise = -1.0, fall = 1.0;
  std::size_t rise_at = 0, fall_at = 0, flat = 0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double d = s[k + 1].value - s[k].value;
    if (std::abs(d) <= out.band) ++flat;
    if (d > rise) {
      rise = d;
      rise_at = k;
    }
    if (d < fall) {
      fall = d;
      fall_at = k;
    }
  }
  const bool up = rise > out.band;
  const bool down = fall < -out.band;
  if (up) out.witness.rising = std::array{s[rise_at].price, s[rise_at + 1].price};
  if (down) out.witness.falling = std::array{s[fall_at].price, s[fall_at + 1].price};
  if (!up && !down) {
    out.verdict = Verdict::Neutral;
  } else if (up && down) {
    out.verdict = Verdict::NonMonotone;
    out.failed = FailedCondition::BinaryExpression;
  } else {
    out.verdict = (up == increasing_is_imb) ? Verdict::IMB : Verdict::IMG;
  }
  if (flat > 0 && out.verdict != Verdict::Neutral) {
    out.note = std::to_string(flat) + " of " + std::to_string(s.size() - 1) +
               " differences lie inside the tolerance band";
  }
}

MonotonicityVerdict inclusion_failure(const Family& family, double alpha) {
  MonotonicityVerdict out;
  out.alpha = alpha;
  out.verdict = Verdict::NonMonotone;
  out.failed = FailedCondition::PartialInclusion;
  const PartialInclusionReport r = check_partial_inclusion(family);
  if (!r.violations.empty()) {
    const InclusionViolation& v = r.violations.front();
    out.witness.type = v.type;
    out.note = "monopoly price of type " + std::to_string(v.type + 1) +
               (v.kind == InclusionKind::FullExclusion ? " lies above" : " lies below") +
               " the support of type " + std::to_string(v.other + 1);
  }
  return out;
}

}  // namespace

double binary_expression(const Family& family2, double p, WelfareWeight w) {
  const Pair t = binary_pair(family2);
  const DemandSpec& L = family2.spec(t.lo);
  const DemandSpec& H = family2.spec(t.hi);
  const DerivStack rL = revenue_derivs(L, p);
  const DerivStack rH = revenue_derivs(H, p);
  const double tol = family2.tolerances().root;
  if (rL.d1 > tol || rH.d1 < -tol || (rL.d1 == 0.0 && rH.d1 == 0.0)) {
    std::ostringstream os;
    os << "at p = " << p << ": R_p(theta_L) = " << rL.d1 << ", R_p(theta_H) = " << rH.d1;
    throw Error(ErrorCode::SignConditionViolated, os.str());
  }
  const DerivStack vL = v_alpha_derivs(L, p, w);
  const DerivStack vH = v_alpha_derivs(H, p, w);
  // Multiplied through by R_p(theta_H) so the ratio stays finite at both ends.
  const double num = rH.d1 * vL.d1 - rL.d1 * vH.d1;
  const double den = rH.d1 * rL.d2 - rL.d1 * rH.d2;
  return vH.d0 - vL.d0 + num / den * (rL.d1 - rH.d1);
}

MonotonicityVerdict check_binary(const Family& family2, WelfareWeight w, std::size_t grid_n) {
  const Pair t = binary_pair(family2);
  if (!family2.partial_inclusion()) return inclusion_failure(family2, w.alpha);

  MonotonicityVerdict out;
  out.alpha = w.alpha;
  const PriceInterval I{family2.monopoly_price(t.lo), family2.monopoly_price(t.hi)};
  if (degenerate_interval(I)) {
    out.verdict = Verdict::Neutral;
    out.note = "monopoly prices coincide; every market is priced alike";
    return out;
  }
  for (double p : interior_grid(I.lo, I.hi, std::max<std::size_t>(grid_n, 3))) {
    out.diagnostics.push_back({p, binary_expression(family2, p, w)});
  }
  judge_samples(out, family2.tolerances().mono_expr, false);
  return out;
}

SpanningFit spanning_fit(const Family& family, std::size_t grid_n) {
  SpanningFit out;
  const std::size_t L = family.low_type();
  const std::size_t H = family.high_type();
  const std::vector<double> grid = closed_grid(family.monopoly_price(L), family.monopoly_price(H),
                                               std::max<std::size_t>(grid_n, 2));
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd D(m, static_cast<Eigen::Index>(family.size()));
  for (Eigen::Index k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < family.size(); ++i) {
      D(k, static_cast<Eigen::Index>(i)) = demand_derivs(family.spec(i), grid[k]).d0;
    }
  }
  const double scale = std::max(D.cwiseAbs().maxCoeff(), 1e-300);
  const Eigen::VectorXd a = D.col(static_cast<Eigen::Index>(L));
  const Eigen::VectorXd b = D.col(static_cast<Eigen::Index>(H));

  for (std::size_t i = 0; i < family.size(); ++i) {
    const Eigen::VectorXd y = D.col(static_cast<Eigen::Index>(i));
    SpanCoefficients c;
    auto misfit = [&](double f1, double f2) {
      return (f1 * a + f2 * b - y).cwiseAbs().maxCoeff() / scale;
    };
    auto single = [&](const Eigen::VectorXd& col) {
      const double nn = col.squaredNorm();
      return nn > 0.0 ? std::max(0.0, col.dot(y) / nn) : 0.0;
    };
    if (L == H) {
      c.f1 = c.unconstrained_f1 = single(a);
    } else {
      Eigen::MatrixXd A(m, 2);
      A << a, b;
      const Eigen::Vector2d f = A.completeOrthogonalDecomposition().solve(y);
      c.unconstrained_f1 = f[0];
      c.unconstrained_f2 = f[1];
      c.unconstrained_negative = f[0] < 0.0 || f[1] < 0.0;
      if (!c.unconstrained_negative) {
        c.f1 = f[0];
        c.f2 = f[1];
      } else {
        const double g1 = single(a);
        const double g2 = single(b);
        if (misfit(g1, 0.0) <= misfit(0.0, g2)) {
          c.f1 = g1;
        } else {
          c.f2 = g2;
        }
      }
    }
    c.residual = misfit(c.f1, c.f2);
    if (c.residual > out.max_residual) {
      out.max_residual = c.residual;
      out.worst_type = i;
    }
    out.any_unconstrained_negative = out.any_unconstrained_negative || c.unconstrained_negative;
    out.coeffs.push_back(c);
  }
  return out;
}

MonotonicityVerdict classify(const Family& family, WelfareWeight w, std::size_t grid_n) {
  if (family.size() == 1) {
    MonotonicityVerdict out;
    out.alpha = w.alpha;
    out.verdict = Verdict::Neutral;
    out.note = "a single type leaves nothing to learn";
    return out;
  }
  if (family.size() == 2) return check_binary(family, w, grid_n);
  if (!family.partial_inclusion()) return inclusion_failure(family, w.alpha);

  const SpanningFit fit = spanning_fit(family, grid_n);
  if (fit.max_residual > family.tolerances().span) {
    MonotonicityVerdict out;
    out.alpha = w.alpha;
    out.verdict = Verdict::NonMonotone;
    out.failed = FailedCondition::Spanning;
    out.witness.type = fit.worst_type;
    out.witness.residual = fit.max_residual;
    out.note = "type " + std::to_string(fit.worst_type + 1) +
               " is not a nonnegative combination of the extreme-price demands";
    return out;
  }
  const std::size_t L = family.low_type();
  const std::size_t H = family.high_type();
  if (L == H) {
    MonotonicityVerdict out;
    out.alpha = w.alpha;
    out.verdict = Verdict::Neutral;
    out.note = "monopoly prices coincide; every market is priced alike";
    return out;
  }
  MonotonicityVerdict out = check_binary(family.subfamily({L, H}), w, grid_n);
  if (fit.any_unconstrained_negative) {
    out.note += (out.note.empty() ? "" : "; ") +
                std::string("unconstrained spanning fit had negative weights");
  }
  return out;
}

ThreeEffects three_effects(const Family& family2, double mu_high, WelfareWeight w) {
  const Pair t = binary_pair(family2);
  Eigen::VectorXd mu(2);
  mu[static_cast<Eigen::Index>(t.hi)] = mu_high;
  mu[static_cast<Eigen::Index>(t.lo)] = 1.0 - mu_high;
  const Market m(mu);
  const PriceLocal P = price_local(family2, m);
  // Reduced coordinate is the weight on type index 1.
  const double sign = t.hi == 1 ? 1.0 : -1.0;
  const double p_mu = sign * P.grad[0];
  const double p_mumu = P.hess(0, 0);

  const DerivStack vL = v_alpha_derivs(family2.spec(t.lo), P.price, w);
  const DerivStack vH = v_alpha_derivs(family2.spec(t.hi), P.price, w);
  const double e_vp = (1.0 - mu_high) * vL.d1 + mu_high * vH.d1;
  const double e_vpp = (1.0 - mu_high) * vL.d2 + mu_high * vH.d2;

  ThreeEffects out;
  out.mu = mu_high;
  out.price = P.price;
  out.within = p_mu * p_mu * e_vpp;
  out.cross = 2.0 * p_mu * (vH.d1 - vL.d1);
  out.curvature = p_mumu * e_vp;
  out.total = out.within + out.cross + out.curvature;
  return out;
}

SufficientConditions sufficient_conditions(const Family& family2, WelfareWeight w,
                                           std::size_t grid_n) {
  const Pair t = binary_pair(family2);
  SufficientConditions out;
  out.per_condition = {{"within_type", true, true, 0.0},
                       {"cross_types", true, true, 0.0},
                       {"price_curvature", true, true, 0.0}};
  if (!family2.partial_inclusion()) {
    out.img_ok = out.imb_ok = false;
    for (auto& c : out.per_condition) c.img_ok = c.imb_ok = false;
    return out;
  }
  const double pl = family2.monopoly_price(t.lo);
  const double ph = family2.monopoly_price(t.hi);
  if (!degenerate_interval({pl, ph})) {
    const DemandSpec& L = family2.spec(t.lo);
    const DemandSpec& H = family2.spec(t.hi);
    auto fail = [](ConditionCheck& c, bool img_bad, bool imb_bad, double p) {
      if ((img_bad && c.img_ok) || (imb_bad && c.imb_ok)) c.worst_price = p;
      if (img_bad) c.img_ok = false;
      if (imb_bad) c.imb_ok = false;
    };
    for (double p : interior_grid(pl, ph, std::max<std::size_t>(grid_n, 3))) {
      const DerivStack vL = v_alpha_derivs(L, p, w);
      const DerivStack vH = v_alpha_derivs(H, p, w);
      const DerivStack rL = revenue_derivs(L, p);
      const DerivStack rH = revenue_derivs(H, p);
      const double eps = 1e-12;
      auto slack = [&](double a, double b) { return eps * (1.0 + std::abs(a) + std::abs(b)); };

      ConditionCheck& c1 = out.per_condition[0];
      fail(c1, vL.d2 < -slack(vL.d2, 0) || vH.d2 < -slack(vH.d2, 0),
           vL.d2 > slack(vL.d2, 0) || vH.d2 > slack(vH.d2, 0), p);

      ConditionCheck& c2 = out.per_condition[1];
      const double dv = vH.d1 - vL.d1;
      fail(c2, dv < -slack(vH.d1, vL.d1), dv > slack(vH.d1, vL.d1), p);

      ConditionCheck& c3 = out.per_condition[2];
      const double drpp = rH.d2 - rL.d2;
      const bool ppp_neg = rL.d3 < -slack(rL.d3, 0) || rH.d3 < -slack(rH.d3, 0);
      const bool ppp_pos = rL.d3 > slack(rL.d3, 0) || rH.d3 > slack(rH.d3, 0);
      fail(c3, ppp_pos || drpp > slack(rH.d2, rL.d2), ppp_neg || drpp < -slack(rH.d2, rL.d2), p);
    }
  }
  for (const auto& c : out.per_condition) {
    out.img_ok = out.img_ok && c.img_ok;
    out.imb_ok = out.imb_ok && c.imb_ok;
  }
  return out;
}

std::vector<AlphaVerdict> alpha_monotone_scan(const Family& family,
                                              const std::vector<double>& alphas,
                                              std::size_t grid_n) {
  if (!std::is_sorted(alphas.begin(), alphas.end())) {
    throw Error(ErrorCode::InvalidParameter, "alphas must be sorted ascending");
  }
  std::vector<AlphaVerdict> out;
  for (double a : alphas) out.push_back({a, classify(family, WelfareWeight(a), grid_n)});
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      const auto& lo = out[i].verdict;
      const auto& hi = out[j].verdict;
      std::ostringstream os;
      if (hi.img() && !lo.img()) {
        os << "IMG at alpha = " << out[j].alpha << " but not at alpha = " << out[i].alpha;
      } else if (lo.imb() && !hi.imb()) {
        os << "IMB at alpha = " << out[i].alpha << " but not at alpha = " << out[j].alpha;
      } else {
        continue;
      }
      throw Error(ErrorCode::CorollaryViolation, os.str());
    }
  }
  return out;
}

double affine_family_expression(const DemandSpec& base, double p, WelfareWeight w) {
  const DerivStack d = demand_derivs(base, p);
  const DerivStack r = revenue_derivs(base, p);
  if (!(std::abs(r.d2) >= default_tolerances().conc)) {
    std::ostringstream os;
    os << "R'' = " << r.d2 << " at p = " << p;
    throw Error(ErrorCode::DegenerateCurvature, os.str());
  }
  const double a = w.alpha;
  return (2.0 * a - 1.0) * p + a * p * d.d1 / r.d2;
}

AffineVerdict classify_affine(const Family& family, WelfareWeight w, std::size_t grid_n) {
  const DemandSpec* base = nullptr;
  for (const DemandSpec& s : family.specs()) {
    const auto* q = std::get_if<AffineParams>(&s.params());
    if (q == nullptr) {
      throw Error(ErrorCode::InvalidParameter, "every type must be an AffineOfBase curve");
    }
    if (base == nullptr) {
      base = q->base.get();
    } else if (q->base.get() != base && q->base->describe() != base->describe()) {
      throw Error(ErrorCode::InvalidParameter, "AffineOfBase types must share one base curve");
    }
  }

  AffineVerdict out;
  if (const auto* q = std::get_if<PowerDensityParams>(&base->params())) {
    if (q->c4 >= 0.0 || q->c4 <= -1.0) out.alpha_hat = q->c4 / (2.0 * q->c4 + 1.0);
  }
  if (!family.partial_inclusion()) {
    out.verdict = inclusion_failure(family, w.alpha);
    return out;
  }
  MonotonicityVerdict& v = out.verdict;
  v.alpha = w.alpha;
  const PriceInterval I = family.price_range();
  if (degenerate_interval(I)) {
    v.verdict = Verdict::Neutral;
    v.note = "monopoly prices coincide; every market is priced alike";
    return out;
  }
  for (double p : closed_grid(I.lo, I.hi, std::max<std::size_t>(grid_n, 3))) {
    v.diagnostics.push_back({p, affine_family_expression(*base, p, w)});
  }
  judge_samples(v, family.tolerances().mono_expr, true);
  return out;
}

}  // namespace segwelfare
