#include "segwelfare/demand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "segwelfare/detail/roots.hpp"
#include "segwelfare/errors.hpp"

namespace segwelfare {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool finite_stack(const DerivStack& s) {
  return std::isfinite(s.d0) && std::isfinite(s.d1) && std::isfinite(s.d2) &&
         std::isfinite(s.d3);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidParameter, what);
}

template <class F>
double integrate(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13);
}

double density(const PowerDensityParams& q, double z) {
  return q.c1 * std::pow(q.c2 + q.c3 * z, q.c4) / (z * z);
}

// Derivatives on the support itself; may be non-finite at an endpoint such as
// p = 0 for PowerUnit with theta < 1.
DerivStack inside_derivs(const DemandSpec& spec, double p) {
  const PriceInterval& I = spec.support();
  return std::visit(
      overloaded{
          [&](const LinearShiftParams& q) {
            const double c = q.c;
            return DerivStack{q.a - p + c / p, -1.0 - c / (p * p), 2.0 * c / (p * p * p),
                              -6.0 * c / (p * p * p * p)};
          },
          [&](const ConstantElasticityParams& q) {
            const double t = q.theta;
            const double g = q.c + p;
            const double d0 = std::pow(g, -t);
            return DerivStack{d0, -t * d0 / g, t * (t + 1.0) * d0 / (g * g),
                              -t * (t + 1.0) * (t + 2.0) * d0 / (g * g * g)};
          },
          [&](const PowerUnitParams& q) {
            const double t = q.theta;
            if (p == 0.0) {
              const double inf = std::numeric_limits<double>::infinity();
              const double nan = std::numeric_limits<double>::quiet_NaN();
              const double d1 = t < 1.0 ? -inf : (t == 1.0 ? -1.0 : 0.0);
              const double d2 = t == 1.0 ? 0.0 : t == 2.0 ? -2.0 : t > 2.0 ? 0.0 : nan;
              return DerivStack{1.0, d1, d2, nan};
            }
            const double pt = std::pow(p, t);
            return DerivStack{1.0 - pt, -t * pt / p, -t * (t - 1.0) * pt / (p * p),
                              -t * (t - 1.0) * (t - 2.0) * pt / (p * p * p)};
          },
          [&](const PowerDensityParams& q) {
            const double g = q.c2 + q.c3 * p;
            const double gc = std::pow(g, q.c4);
            const double f = q.c1 * gc / (p * p);
            const double f1 = q.c1 * q.c3 * q.c4 * gc / (g * p * p) - 2.0 * f / p;
            const double f2 = q.c1 * q.c3 * q.c3 * q.c4 * (q.c4 - 1.0) * gc / (g * g * p * p) -
                              4.0 * q.c1 * q.c3 * q.c4 * gc / (g * p * p * p) + 6.0 * f / (p * p);
            const double d0 = integrate([&](double z) { return density(q, z); }, p, I.hi);
            return DerivStack{d0, -f, -f1, -f2};
          },
          [&](const SmoothStepParams& q) {
            const double e = q.width;
            const double u = (p - (q.value - e)) / e;
            const double k = 1.0 - q.slope0;
            return DerivStack{1.0 - q.slope0 * u - k * u * u * u,
                              -(q.slope0 + 3.0 * k * u * u) / e, -6.0 * k * u / (e * e),
                              -6.0 * k / (e * e * e)};
          },
          [&](const AffineParams& q) {
            DerivStack b = inside_derivs(*q.base, p);
            return DerivStack{q.scale * b.d0 + q.shift, q.scale * b.d1, q.scale * b.d2,
                              q.scale * b.d3};
          },
          [&](const TabulatedParams& q) {
            const MonotoneSpline& s = *q.curve;
            const double h = default_tolerances().fd_rel_step * I.width();
            const double a = std::max(I.lo, p - h);
            const double b = std::min(I.hi, p + h);
            return DerivStack{s.value(p), s.slope(p), s.curvature(p),
                              (s.curvature(b) - s.curvature(a)) / (b - a)};
          },
      },
      spec.params());
}

DerivStack extended_derivs(const DemandSpec& spec, double p) {
  const PriceInterval& I = spec.support();
  if (p > I.hi) return {};
  if (p < I.lo) return {inside_derivs(spec, I.lo).d0, 0.0, 0.0, 0.0};
  return inside_derivs(spec, p);
}

double demand_value(const DemandSpec& spec, double p) { return extended_derivs(spec, p).d0; }

// Integral of D over [p, p_hi] for p inside the support.
double surplus_inside(const DemandSpec& spec, double p) {
  const PriceInterval& I = spec.support();
  const double hi = I.hi;
  return std::visit(
      overloaded{
          [&](const LinearShiftParams& q) {
            return q.a * (hi - p) - 0.5 * (hi * hi - p * p) + q.c * std::log(hi / p);
          },
          [&](const ConstantElasticityParams& q) {
            return (std::pow(q.c + p, 1.0 - q.theta) - std::pow(q.c + hi, 1.0 - q.theta)) /
                   (q.theta - 1.0);
          },
          [&](const PowerUnitParams& q) {
            return (hi - p) - (std::pow(hi, q.theta + 1.0) - std::pow(p, q.theta + 1.0)) /
                                  (q.theta + 1.0);
          },
          [&](const PowerDensityParams& q) {
            return integrate([&](double z) { return (z - p) * density(q, z); }, p, hi);
          },
          [&](const SmoothStepParams& q) {
            const double e = q.width;
            const double k = 1.0 - q.slope0;
            const double u = (p - (q.value - e)) / e;
            // antiderivative of the ramp in u, evaluated from u to 1
            auto F = [&](double s) { return s - 0.5 * q.slope0 * s * s - 0.25 * k * s * s * s * s; };
            return e * (F(1.0) - F(u));
          },
          [&](const AffineParams& q) {
            return q.scale * surplus_inside(*q.base, p) + q.shift * (hi - p);
          },
          [&](const TabulatedParams& q) {
            // Two-point Gauss is exact on each cubic segment.
            const MonotoneSpline& s = *q.curve;
            const auto& x = s.knots();
            double total = 0.0;
            double a = p;
            for (std::size_t k = 1; k < x.size(); ++k) {
              if (x[k] <= a) continue;
              const double b = x[k];
              total += boost::math::quadrature::gauss<double, 4>::integrate(
                  [&](double z) { return s.value(z); }, a, b);
              a = b;
            }
            return total;
          },
      },
      spec.params());
}

}  // namespace

std::string to_string(DemandFamily family) {
  switch (family) {
    case DemandFamily::LinearShift: return "LinearShift";
    case DemandFamily::ConstantElasticity: return "ConstantElasticity";
    case DemandFamily::PowerUnit: return "PowerUnit";
    case DemandFamily::AffineOfBase: return "AffineOfBase";
    case DemandFamily::Tabulated: return "Tabulated";
    case DemandFamily::PowerDensity: return "PowerDensity";
    case DemandFamily::SmoothStep: return "SmoothStep";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// MonotoneSpline

MonotoneSpline::MonotoneSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  require(n >= 2 && y_.size() == n, "spline needs at least two (x, y) pairs of equal length");
  for (std::size_t k = 1; k < n; ++k) {
    require(x_[k] > x_[k - 1], "spline abscissae must be strictly increasing");
  }
  std::vector<double> delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) delta[k] = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);

  m_.assign(n, 0.0);
  m_.front() = delta.front();
  m_.back() = delta.back();
  for (std::size_t k = 1; k + 1 < n; ++k) {
    m_[k] = delta[k - 1] * delta[k] > 0.0 ? 0.5 * (delta[k - 1] + delta[k]) : 0.0;
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (delta[k] == 0.0) {
      m_[k] = m_[k + 1] = 0.0;
      continue;
    }
    const double a = m_[k] / delta[k];
    const double b = m_[k + 1] / delta[k];
    const double r = a * a + b * b;
    if (r > 9.0) {
      const double tau = 3.0 / std::sqrt(r);
      m_[k] = tau * a * delta[k];
      m_[k + 1] = tau * b * delta[k];
    }
  }
}

std::size_t MonotoneSpline::segment(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(k, x_.size() - 2);
}

double MonotoneSpline::value(double x) const {
  const std::size_t k = segment(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * m_[k] +
         (-2 * t3 + 3 * t2) * y_[k + 1] + (t3 - t2) * h * m_[k + 1];
}

double MonotoneSpline::slope(double x) const {
  const std::size_t k = segment(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y_[k] + (-6 * t2 + 6 * t) * y_[k + 1]) / h +
         (3 * t2 - 4 * t + 1) * m_[k] + (3 * t2 - 2 * t) * m_[k + 1];
}

double MonotoneSpline::curvature(double x) const {
  const std::size_t k = segment(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  return ((12 * t - 6) * y_[k] + (6 - 12 * t) * y_[k + 1]) / (h * h) +
         ((6 * t - 4) * m_[k] + (6 * t - 2) * m_[k + 1]) / h;
}

// ---------------------------------------------------------------------------
// DemandSpec

DemandSpec::DemandSpec(DemandParams params, PriceInterval support)
    : params_(std::move(params)), support_(support) {
  require(std::isfinite(support_.lo) && std::isfinite(support_.hi),
          "support must be finite; truncate the curve");
  require(support_.lo >= 0.0 && support_.lo < support_.hi, "support must satisfy 0 <= lo < hi");
}

DemandSpec DemandSpec::linear_shift(double a, double c, std::optional<double> p_lo) {
  require(a > 0.0 && std::isfinite(a), "LinearShift needs a > 0");
  require(c >= 0.0 && std::isfinite(c), "LinearShift needs c >= 0");
  const double lo = p_lo.value_or(1e-3 * a);
  require(lo > 0.0 && lo < a, "LinearShift lower support must lie in (0, a)");
  return DemandSpec(LinearShiftParams{a, c}, {lo, a});
}

DemandSpec DemandSpec::constant_elasticity(double c, double theta, std::optional<double> p_hi,
                                           double p_lo) {
  require(c > 0.0 && std::isfinite(c), "ConstantElasticity needs c > 0");
  require(theta > 1.0 && std::isfinite(theta), "ConstantElasticity needs theta > 1");
  return DemandSpec(ConstantElasticityParams{c, theta},
                    {p_lo, p_hi.value_or(2.0 * c / (theta - 1.0))});
}

DemandSpec DemandSpec::power_unit(double theta) {
  require(theta > 0.0 && std::isfinite(theta), "PowerUnit needs theta > 0");
  return DemandSpec(PowerUnitParams{theta}, {0.0, 1.0});
}

DemandSpec DemandSpec::power_density(double c1, double c2, double c3, double c4,
                                     PriceInterval support) {
  require(c1 > 0.0, "PowerDensity needs c1 > 0");
  require(support.lo > 0.0, "PowerDensity needs a positive lower support");
  require(c2 + c3 * support.lo > 0.0 && c2 + c3 * support.hi > 0.0,
          "PowerDensity needs c2 + c3 p > 0 on the support");
  require(c3 * c4 > 0.0, "PowerDensity needs c3 c4 > 0 for concave revenue");
  return DemandSpec(PowerDensityParams{c1, c2, c3, c4}, support);
}

DemandSpec DemandSpec::smooth_step(double value, double width) {
  require(value > 0.0 && std::isfinite(value), "SmoothStep needs value > 0");
  require(width > 0.0 && width <= value, "SmoothStep needs 0 < width <= value");
  // A gentle initial slope keeps the monopoly price inside the ramp.
  return DemandSpec(SmoothStepParams{value, width, 0.5 * width / value}, {value - width, value});
}

DemandSpec DemandSpec::affine_of_base(std::shared_ptr<const DemandSpec> base, double scale,
                                      double shift) {
  require(base != nullptr, "AffineOfBase needs a base curve");
  require(scale > 0.0 && std::isfinite(scale), "AffineOfBase needs scale > 0");
  require(std::isfinite(shift), "AffineOfBase shift must be finite");
  const PriceInterval I = base->support();
  require(scale * inside_derivs(*base, I.hi).d0 + shift >= 0.0,
          "AffineOfBase demand is negative at the top of the support");
  return DemandSpec(AffineParams{std::move(base), scale, shift}, I);
}

DemandSpec DemandSpec::tabulated(std::vector<double> prices, std::vector<double> quantities) {
  for (std::size_t k = 0; k < quantities.size(); ++k) {
    require(quantities[k] >= 0.0, "tabulated quantities must be nonnegative");
    if (k > 0) require(quantities[k] < quantities[k - 1], "tabulated demand must be decreasing");
  }
  auto curve = std::make_shared<const MonotoneSpline>(std::move(prices), std::move(quantities));
  const PriceInterval I{curve->front(), curve->back()};
  return DemandSpec(TabulatedParams{std::move(curve)}, I);
}

DemandSpec DemandSpec::tabulated_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigParse, "cannot open " + path.string());
  std::vector<double> p, q;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double a = 0.0, b = 0.0;
    if (!(row >> a >> b)) {
      if (p.empty() && lineno == 1) continue;  // header
      throw Error(ErrorCode::ConfigParse,
                  path.string() + ":" + std::to_string(lineno) + ": expected two numbers");
    }
    p.push_back(a);
    q.push_back(b);
  }
  return tabulated(std::move(p), std::move(q));
}

DemandFamily DemandSpec::family() const {
  // Variant alternatives are declared in enum order.
  return static_cast<DemandFamily>(params_.index());
}

std::string DemandSpec::describe() const {
  std::string body = std::visit(
      overloaded{
          [](const LinearShiftParams& q) { return "a=" + fmt(q.a) + ", c=" + fmt(q.c); },
          [](const ConstantElasticityParams& q) {
            return "c=" + fmt(q.c) + ", theta=" + fmt(q.theta);
          },
          [](const PowerUnitParams& q) { return "theta=" + fmt(q.theta); },
          [](const PowerDensityParams& q) {
            return "c1=" + fmt(q.c1) + ", c2=" + fmt(q.c2) + ", c3=" + fmt(q.c3) +
                   ", c4=" + fmt(q.c4);
          },
          [](const SmoothStepParams& q) {
            return "value=" + fmt(q.value) + ", width=" + fmt(q.width);
          },
          [](const AffineParams& q) {
            return "scale=" + fmt(q.scale) + ", shift=" + fmt(q.shift) + ", base=" +
                   q.base->describe();
          },
          [](const TabulatedParams& q) {
            return std::to_string(q.curve->knots().size()) + " knots";
          },
      },
      params_);
  return to_string(family()) + "(" + body + ") on [" + fmt(support_.lo) + ", " +
         fmt(support_.hi) + "]";
}

// ---------------------------------------------------------------------------
// evaluation

DerivStack demand_derivs(const DemandSpec& spec, double p) {
  if (!(p >= 0.0)) throw Error(ErrorCode::OutOfSupport, "negative price " + fmt(p));
  DerivStack s = extended_derivs(spec, p);
  if (!finite_stack(s)) {
    throw Error(ErrorCode::NonFiniteValue, spec.describe() + " at p=" + fmt(p));
  }
  return s;
}

DerivStack revenue_derivs(const DemandSpec& spec, double p) {
  if (!spec.support().contains(p)) {
    throw Error(ErrorCode::OutOfSupport, "p=" + fmt(p) + " outside " + spec.describe());
  }
  const DerivStack d = inside_derivs(spec, p);
  if (p == 0.0) {
    // p D_p -> 0 at the origin even when D_p diverges.
    if (!std::isfinite(d.d0)) throw Error(ErrorCode::NonFiniteValue, spec.describe());
    return {0.0, d.d0, 2.0 * d.d1, 3.0 * d.d2};
  }
  if (!finite_stack(d)) {
    throw Error(ErrorCode::NonFiniteValue, spec.describe() + " at p=" + fmt(p));
  }
  return {p * d.d0, d.d0 + p * d.d1, 2.0 * d.d1 + p * d.d2, 3.0 * d.d2 + p * d.d3};
}

double revenue_value(const DemandSpec& spec, double p) { return p * demand_value(spec, p); }

double consumer_surplus(const DemandSpec& spec, double p) {
  const PriceInterval& I = spec.support();
  if (p >= I.hi) return 0.0;
  double cs = 0.0;
  if (p < I.lo) {
    cs = demand_value(spec, I.lo) * (I.lo - p) + surplus_inside(spec, I.lo);
  } else {
    cs = surplus_inside(spec, p);
  }
  if (!std::isfinite(cs)) throw Error(ErrorCode::NonFiniteValue, "surplus of " + spec.describe());
  return cs;
}

double monopoly_price(const DemandSpec& spec, const Tolerances& tol) {
  const PriceInterval& I = spec.support();
  const double top = revenue_derivs(spec, I.lo).d1;
  const double bottom = revenue_derivs(spec, I.hi).d1;
  if (!(top > 0.0) || !(bottom < 0.0)) {
    throw Error(ErrorCode::NoInteriorRoot,
                "marginal revenue does not change sign on the support of " + spec.describe());
  }
  const double p = detail::decreasing_root(
      [&](double x) {
        const DerivStack r = revenue_derivs(spec, x);
        return std::pair{r.d1, r.d2};
      },
      I.lo, I.hi);
  const double resid = revenue_derivs(spec, p).d1;
  if (std::abs(resid) > tol.root) {
    throw Error(ErrorCode::NoInteriorRoot, "marginal revenue residual " + fmt(resid) + " at p=" +
                                               fmt(p) + " for " + spec.describe());
  }
  return p;
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ValidationReport validate_assumption1(const DemandSpec& spec, std::size_t grid_n,
                                      const Tolerances& tol) {
  if (grid_n < 16) throw Error(ErrorCode::InvalidParameter, "validation grid needs >= 16 cells");
  const PriceInterval& I = spec.support();
  ValidationCheck finite{"finite", true, 0.0, I.lo, ""};
  ValidationCheck mono{"monotone", true, -std::numeric_limits<double>::infinity(), I.lo, ""};
  ValidationCheck conc{"concave_revenue", true, -std::numeric_limits<double>::infinity(), I.lo,
                       ""};
  for (std::size_t k = 0; k < grid_n; ++k) {
    const double p = I.lo + (static_cast<double>(k) + 0.5) * I.width() / static_cast<double>(grid_n);
    DerivStack r;
    double dp = 0.0;
    try {
      dp = demand_derivs(spec, p).d1;
      r = revenue_derivs(spec, p);
    } catch (const Error& e) {
      if (finite.passed) {
        finite.passed = false;
        finite.at_price = p;
        finite.detail = e.what();
      }
      continue;
    }
    if (dp > mono.worst_margin) {
      mono.worst_margin = dp;
      mono.at_price = p;
    }
    if (r.d2 > conc.worst_margin) {
      conc.worst_margin = r.d2;
      conc.at_price = p;
    }
  }
  mono.passed = mono.worst_margin < -tol.mono;
  conc.passed = conc.worst_margin < -tol.conc;
  if (!mono.passed) mono.detail = "D_p = " + fmt(mono.worst_margin) + " at p=" + fmt(mono.at_price);
  if (!conc.passed) {
    conc.detail = "R_pp = " + fmt(conc.worst_margin) + " at p=" + fmt(conc.at_price) +
                  ", revenue is not strictly concave there";
  }

  ValidationReport report;
  ValidationCheck root{"interior_monopoly_price", false, 0.0, 0.0, ""};
  try {
    const double p = monopoly_price(spec, tol);
    root.passed = p > I.lo && p < I.hi;
    root.at_price = p;
    root.worst_margin = revenue_derivs(spec, p).d1;
    report.monopoly_price = p;
  } catch (const Error& e) {
    root.detail = e.what();
  }
  report.checks = {finite, mono, conc, root};
  return report;
}

}  // namespace segwelfare
