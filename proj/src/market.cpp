#include "segwelfare/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "segwelfare/detail/roots.hpp"
#include "segwelfare/errors.hpp"

namespace segwelfare {

Family::Family(std::vector<DemandSpec> specs, const Tolerances& tol)
    : specs_(std::move(specs)), tol_(tol) {
  if (specs_.empty()) throw Error(ErrorCode::InvalidParameter, "a family needs at least one type");
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    ValidationReport r = validate_assumption1(specs_[i], tol_.validate_grid, tol_);
    if (!r.monopoly_price) {
      const ValidationCheck* c = r.find("interior_monopoly_price");
      throw Error(ErrorCode::NoInteriorRoot,
                  "type " + std::to_string(i + 1) + ": " + (c ? c->detail : std::string()));
    }
    prices_.push_back(*r.monopoly_price);
    reports_.push_back(std::move(r));
  }
  for (std::size_t i = 1; i < prices_.size(); ++i) {
    if (prices_[i] < prices_[low_]) low_ = i;
    if (prices_[i] > prices_[high_]) high_ = i;
  }
  partial_inclusion_ = check_partial_inclusion(*this).holds;
}

Family Family::subfamily(const std::vector<std::size_t>& types) const {
  std::vector<DemandSpec> sub;
  for (std::size_t i : types) sub.push_back(spec(i));
  return Family(std::move(sub), tol_);
}

Market::Market(Eigen::VectorXd mu, double simplex_tol) : mu_(std::move(mu)) {
  if (mu_.size() == 0) throw Error(ErrorCode::SimplexViolation, "empty market");
  for (Eigen::Index i = 0; i < mu_.size(); ++i) {
    if (!std::isfinite(mu_[i]) || mu_[i] < -1e-14) {
      std::ostringstream os;
      os << "coordinate " << i + 1 << " = " << mu_[i];
      throw Error(ErrorCode::SimplexViolation, os.str());
    }
    if (mu_[i] < 0.0) mu_[i] = 0.0;
  }
  const double sum = mu_.sum();
  if (std::abs(sum - 1.0) > simplex_tol) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum to " << sum;
    throw Error(ErrorCode::SimplexViolation, os.str());
  }
}

Market Market::point_mass(std::size_t n, std::size_t i) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  mu[static_cast<Eigen::Index>(i)] = 1.0;
  return Market(mu);
}

Market Market::uniform(std::size_t n) {
  return Market(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)),
                1e-12);
}

Market Market::from_reduced(const Eigen::VectorXd& reduced, double simplex_tol) {
  Eigen::VectorXd mu(reduced.size() + 1);
  mu[0] = 1.0 - reduced.sum();
  mu.tail(reduced.size()) = reduced;
  if (mu[0] < 0.0 && mu[0] > -1e-14) mu[0] = 0.0;
  return Market(mu, simplex_tol);
}

Market Market::binary(double w) {
  Eigen::VectorXd mu(2);
  mu << 1.0 - w, w;
  return Market(mu);
}

PartialInclusionReport check_partial_inclusion(const Family& family) {
  PartialInclusionReport out;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double p = family.monopoly_price(i);
    for (std::size_t j = 0; j < family.size(); ++j) {
      if (i == j) continue;
      const PriceInterval& I = family.spec(j).support();
      if (p > I.hi) out.violations.push_back({i, j, InclusionKind::FullExclusion});
      if (p < I.lo) out.violations.push_back({i, j, InclusionKind::FullInclusion});
    }
  }
  out.holds = out.violations.empty();
  return out;
}

namespace {

void check_size(const Family& family, const Market& m) {
  if (m.size() != family.size()) {
    throw Error(ErrorCode::WrongDimension, "market has " + std::to_string(m.size()) +
                                               " entries for a family of " +
                                               std::to_string(family.size()));
  }
}

double expected_revenue(const Family& family, const Market& m, double p) {
  double r = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (m[i] > 0.0) r += m[i] * revenue_value(family.spec(i), p);
  }
  return r;
}

double extended_marginal_revenue(const Family& family, const Market& m, double p) {
  double r = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (m[i] <= 0.0) continue;
    const DerivStack d = demand_derivs(family.spec(i), p);
    r += m[i] * (d.d0 + p * d.d1);
  }
  return r;
}

PriceSolution first_order_price(const Family& family, const Market& m) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (m[i] <= 0.0) continue;
    lo = std::min(lo, family.monopoly_price(i));
    hi = std::max(hi, family.monopoly_price(i));
  }
  auto foc = [&](double p) {
    double v = 0.0, dv = 0.0;
    for (std::size_t i = 0; i < family.size(); ++i) {
      if (m[i] <= 0.0) continue;
      const DerivStack r = revenue_derivs(family.spec(i), p);
      v += m[i] * r.d1;
      dv += m[i] * r.d2;
    }
    return std::pair{v, dv};
  };
  PriceSolution s;
  s.price = hi > lo ? detail::decreasing_root(foc, lo, hi) : lo;
  s.foc_residual = foc(s.price).first;
  return s;
}

PriceSolution grid_price(const Family& family, const Market& m) {
  const std::size_t n = family.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    lo = std::min(lo, family.spec(i).support().lo);
    hi = std::max(hi, family.spec(i).support().hi);
  }
  const std::size_t g = std::max<std::size_t>(family.tolerances().fallback_grid, 2);
  std::vector<double> cand;
  cand.reserve(g + 3 * n);
  for (std::size_t k = 0; k < g; ++k) {
    cand.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(g - 1));
  }
  // Kinks and jumps of expected revenue sit at support endpoints.
  for (std::size_t i = 0; i < n; ++i) {
    cand.push_back(family.spec(i).support().lo);
    cand.push_back(family.spec(i).support().hi);
    cand.push_back(family.monopoly_price(i));
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  std::vector<double> val(cand.size());
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cand.size(); ++k) {
    val[k] = expected_revenue(family, m, cand[k]);
    best_val = std::max(best_val, val[k]);
  }
  const double tie = 1e-12 * std::max(1.0, std::abs(best_val));
  std::size_t best = 0;
  while (val[best] < best_val - tie) ++best;

  PriceSolution s;
  s.used_grid = true;
  s.price = cand[best];
  double price_val = val[best];
  const double cell = (hi - lo) / static_cast<double>(g - 1);
  for (std::size_t k = 0; k < cand.size(); ++k) {
    if (val[k] >= best_val - tie && std::abs(cand[k] - s.price) > 2.0 * cell) {
      s.tie_break_bound = true;
    }
  }

  auto refine = [&](double a, double b) {
    if (!(b > a)) return;
    auto r = boost::math::tools::brent_find_minima(
        [&](double p) { return -expected_revenue(family, m, p); }, a, b, 52);
    if (-r.second > price_val + tie) {
      s.price = r.first;
      price_val = -r.second;
    }
  };
  const double centre = s.price;
  if (best > 0) refine(cand[best - 1], centre);
  if (best + 1 < cand.size()) refine(centre, cand[best + 1]);
  s.foc_residual = extended_marginal_revenue(family, m, s.price);
  return s;
}

}  // namespace

PriceSolution solve_price(const Family& family, const Market& m, PricingMode mode) {
  check_size(family, m);
  if (family.partial_inclusion()) return first_order_price(family, m);
  if (mode == PricingMode::GridFallback) return grid_price(family, m);
  throw Error(ErrorCode::PartialInclusionViolated,
              "the first-order condition does not identify the price; request the grid fallback");
}

double optimal_price(const Family& family, const Market& m, PricingMode mode) {
  return solve_price(family, m, mode).price;
}

PriceLocal price_local(const Family& family, const Market& m) {
  const PriceSolution s = solve_price(family, m, PricingMode::FirstOrder);
  const std::size_t n = family.size();
  const auto k = static_cast<Eigen::Index>(n - 1);
  PriceLocal L;
  L.price = s.price;
  L.revenue.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    L.revenue.push_back(revenue_derivs(family.spec(i), s.price));
    L.e_rpp += m[i] * L.revenue[i].d2;
    L.e_rppp += m[i] * L.revenue[i].d3;
  }
  if (!(std::abs(L.e_rpp) >= family.tolerances().conc)) {
    std::ostringstream os;
    os << "E[R_pp] = " << L.e_rpp << " at p = " << s.price;
    throw Error(ErrorCode::DegenerateCurvature, os.str());
  }
  L.grad.resize(k);
  L.delta_rpp.resize(k);
  const DerivStack& base = L.revenue[0];
  for (Eigen::Index i = 0; i < k; ++i) {
    const DerivStack& r = L.revenue[static_cast<std::size_t>(i) + 1];
    L.grad[i] = -(r.d1 - base.d1) / L.e_rpp;
    L.delta_rpp[i] = r.d2 - base.d2;
  }
  const Eigen::MatrixXd cross = L.delta_rpp * L.grad.transpose();
  const Eigen::MatrixXd h =
      -(L.e_rppp * L.grad * L.grad.transpose() + cross + cross.transpose()) / L.e_rpp;
  L.hess = 0.5 * (h + h.transpose());  // exact symmetry despite rounding order
  return L;
}

Eigen::VectorXd price_gradient(const Family& family, const Market& m) {
  return price_local(family, m).grad;
}

Eigen::MatrixXd price_hessian(const Family& family, const Market& m) {
  return price_local(family, m).hess;
}

}  // namespace segwelfare
