#include "segwelfare/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "segwelfare/errors.hpp"

namespace segwelfare {

namespace {

double demand_at(const DemandSpec& s, double p) { return demand_derivs(s, p).d0; }

double marginal_revenue(const DemandSpec& s, double p) {
  const DerivStack d = demand_derivs(s, p);
  return d.d0 + p * d.d1;
}

// Shrinks [lo, hi] around the sign change of a decreasing function until the
// bracket stops moving.
template <class F>
double bisect_decreasing(F f, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double oracle_monopoly(const DemandSpec& s) {
  const PriceInterval I = s.support();
  return bisect_decreasing([&](double p) { return marginal_revenue(s, p); }, I.lo, I.hi);
}

double surplus(const DemandSpec& s, double p) {
  using boost::math::quadrature::gauss_kronrod;
  const PriceInterval I = s.support();
  if (p >= I.hi) return 0.0;
  double cs = 0.0;
  double from = p;
  if (p < I.lo) {
    cs += demand_at(s, I.lo) * (I.lo - p);
    from = I.lo;
  }
  auto f = [&](double z) { return demand_at(s, z); };
  cs += gauss_kronrod<double, 31>::integrate(f, from, I.hi, 12, 1e-12);
  return cs;
}

std::vector<std::size_t> active(const Market& m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] > 0.0) out.push_back(i);
  return out;
}

double expected_revenue(const Family& f, const Market& m, double p) {
  double r = 0.0;
  for (std::size_t i : active(m)) r += m[i] * p * demand_at(f.spec(i), p);
  return r;
}

double brute_price(const Family& f, const Market& m) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i : active(m)) {
    lo = std::min(lo, f.spec(i).support().lo);
    hi = std::max(hi, f.spec(i).support().hi);
  }
  const int n = 4096;
  const double step = (hi - lo) / n;
  int best = 0;
  double best_r = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= n; ++k) {
    const double r = expected_revenue(f, m, lo + k * step);
    if (r > best_r) {
      best_r = r;
      best = k;
    }
  }
  // Golden section on the two neighbouring cells.
  double a = lo + std::max(best - 1, 0) * step;
  double b = lo + std::min(best + 1, n) * step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double rc = expected_revenue(f, m, c);
  double rd = expected_revenue(f, m, d);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
    if (rc >= rd) {
      b = d;
      d = c;
      rd = rc;
      c = b - g * (b - a);
      rc = expected_revenue(f, m, c);
    } else {
      a = c;
      c = d;
      rc = rd;
      d = a + g * (b - a);
      rd = expected_revenue(f, m, d);
    }
  }
  const double polished = 0.5 * (a + b);
  const double grid_p = lo + best * step;
  return expected_revenue(f, m, polished) >= best_r ? polished : grid_p;
}

double price_with(const Family& f, const Market& m, const std::vector<double>& mono) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i : active(m)) {
    lo = std::min(lo, mono[i]);
    hi = std::max(hi, mono[i]);
  }
  if (hi - lo <= 0.0) return lo;
  return bisect_decreasing(
      [&](double p) {
        double s = 0.0;
        for (std::size_t i : active(m)) s += m[i] * marginal_revenue(f.spec(i), p);
        return s;
      },
      lo, hi);
}

std::vector<double> monopoly_prices(const Family& f) {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = oracle_monopoly(f.spec(i));
  return out;
}

double value_at(const Family& f, const Market& m, double p, WelfareWeight w) {
  double v = 0.0;
  for (std::size_t i : active(m)) {
    const DemandSpec& s = f.spec(i);
    v += m[i] * (w.alpha * surplus(s, p) + (1.0 - w.alpha) * p * demand_at(s, p));
  }
  return v;
}

void require_away_from_boundary(const Market& m, double h) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] < 2.0 * h) {
      std::ostringstream os;
      os << "coordinate " << i << " is " << m[i] << ", below 2h = " << 2.0 * h;
      throw Error(ErrorCode::BoundaryTooClose, os.str());
    }
}

template <class F>
Eigen::MatrixXd fd_hessian(F f, const Eigen::VectorXd& x, double h) {
  const Eigen::Index k = x.size();
  Eigen::MatrixXd H(k, k);
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
    e[i] = h;
    H(i, i) = (f(x + e) - 2.0 * f0 + f(x - e)) / (h * h);
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd u = Eigen::VectorXd::Zero(k);
      u[j] = h;
      H(i, j) = (f(x + e + u) - f(x + e - u) - f(x - e + u) + f(x - e - u)) / (4.0 * h * h);
      H(j, i) = H(i, j);
    }
  }
  return H;
}

double symmetric_step(const Market& m, const Eigen::VectorXd& d) {
  double t = std::numeric_limits<double>::infinity();
  const double d0 = -d.sum();
  if (std::abs(d0) > 0.0) t = std::min(t, m[0] / std::abs(d0));
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (std::abs(d[i]) > 0.0) t = std::min(t, m[static_cast<std::size_t>(i) + 1] / std::abs(d[i]));
  return t;
}

}  // namespace

double oracle_price(const Family& family, const Market& m, bool brute) {
  if (m.size() != family.size()) throw Error(ErrorCode::WrongDimension, "market size");
  if (brute) return brute_price(family, m);
  return price_with(family, m, monopoly_prices(family));
}

double oracle_value(const Family& family, const Market& m, WelfareWeight w, bool brute) {
  return value_at(family, m, oracle_price(family, m, brute), w);
}

Eigen::VectorXd fd_price_gradient(const Family& family, const Market& m, double h) {
  require_away_from_boundary(m, h);
  const std::vector<double> mono = monopoly_prices(family);
  const Eigen::VectorXd x = m.reduced();
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
    e[i] = h;
    g[i] = (price_with(family, Market::from_reduced(x + e), mono) -
            price_with(family, Market::from_reduced(x - e), mono)) /
           (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_price_hessian(const Family& family, const Market& m, double h) {
  require_away_from_boundary(m, h);
  const std::vector<double> mono = monopoly_prices(family);
  return fd_hessian(
      [&](const Eigen::VectorXd& y) { return price_with(family, Market::from_reduced(y), mono); },
      m.reduced(), h);
}

Eigen::MatrixXd fd_value_hessian(const Family& family, const Market& m, WelfareWeight w,
                                 const OracleConfig& cfg) {
  const double h = cfg.fd_step;
  require_away_from_boundary(m, h);
  const std::vector<double> mono = monopoly_prices(family);
  return fd_hessian(
      [&](const Eigen::VectorXd& y) {
        const Market mk = Market::from_reduced(y);
        return value_at(family, mk, price_with(family, mk, mono), w);
      },
      m.reduced(), h);
}

JacobiResult jacobi_eigen(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::NotSymmetric, "matrix is not square");
  const double scale = a.cwiseAbs().maxCoeff();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
    throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");

  const Eigen::Index n = a.rows();
  Eigen::MatrixXd A = a;
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);
  const double norm = a.norm();
  int rotations = 0;
  const int max_rotations = 100 * static_cast<int>(n * n) + 10;
  while (rotations < max_rotations) {
    Eigen::Index p = 0, q = 0;
    double off = 0.0, big = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        off += 2.0 * A(i, j) * A(i, j);
        if (std::abs(A(i, j)) > big) {
          big = std::abs(A(i, j));
          p = i;
          q = j;
        }
      }
    if (std::sqrt(off) <= 1e-12 * norm || big == 0.0) break;

    const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n);
    J(p, p) = c;
    J(q, q) = c;
    J(p, q) = s;
    J(q, p) = -s;
    A = J.transpose() * A * J;
    V = V * J;
    ++rotations;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index x, Eigen::Index y) { return A(x, x) > A(y, y); });
  JacobiResult r;
  r.values.resize(n);
  r.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    r.values[k] = A(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    r.vectors.col(k) = V.col(order[static_cast<std::size_t>(k)]);
  }
  r.sweeps = rotations;
  return r;
}

ConcavityScan concavification_scan(const Family& family2, WelfareWeight w,
                                   const OracleConfig& cfg) {
  if (family2.size() != 2) throw Error(ErrorCode::WrongDimension, "scan needs two types");
  if (cfg.scan_points < 3) throw Error(ErrorCode::InvalidParameter, "scan needs three points");
  const bool brute = !family2.partial_inclusion();
  const std::vector<double> mono = monopoly_prices(family2);
  const std::size_t n = cfg.scan_points;
  ConcavityScan out;
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Market m = Market::binary(static_cast<double>(k) / static_cast<double>(n - 1));
    const double p = brute ? brute_price(family2, m) : price_with(family2, m, mono);
    out.values[k] = value_at(family2, m, p, w);
  }
  double worst_up = 0.0, worst_down = 0.0;
  std::optional<double> mu_up, mu_down;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double a = out.values[k - 1], b = out.values[k], c = out.values[k + 1];
    const double d2 = a - 2.0 * b + c;
    const double tol = 1e-9 * (std::abs(a) + 2.0 * std::abs(b) + std::abs(c)) + 1e-15;
    const double mu = static_cast<double>(k) / static_cast<double>(n - 1);
    if (d2 > tol && d2 - tol > worst_up) {
      worst_up = d2 - tol;
      mu_up = mu;
    }
    if (d2 < -tol && -d2 - tol > worst_down) {
      worst_down = -d2 - tol;
      mu_down = mu;
    }
  }
  out.concave = !mu_up.has_value();
  out.convex = !mu_down.has_value();
  if (!out.concave)
    out.violation_mu = mu_up;
  else if (!out.convex)
    out.violation_mu = mu_down;
  return out;
}

WitnessResult witness_search(const Family& family, const Market& prior, WelfareWeight w,
                             const OracleConfig& cfg) {
  if (prior.size() != family.size()) throw Error(ErrorCode::WrongDimension, "prior size");
  if (family.size() < 2) throw Error(ErrorCode::WrongDimension, "search needs two types");
  for (std::size_t i = 0; i < prior.size(); ++i)
    if (prior[i] <= 0.0) throw Error(ErrorCode::InvalidParameter, "prior must have full support");

  WitnessResult out;
  out.trials = cfg.search_trials;
  out.seed = cfg.seed;
  out.brute_pricing = !family.partial_inclusion();
  const std::vector<double> mono = monopoly_prices(family);
  auto value = [&](const Market& m) {
    const double p = out.brute_pricing ? brute_price(family, m) : price_with(family, m, mono);
    return value_at(family, m, p, w);
  };
  const double v0 = value(prior);
  out.tolerance = 1e-10 * std::max(1.0, std::abs(v0));

  const Eigen::Index k = static_cast<Eigen::Index>(family.size()) - 1;
  for (std::size_t trial = 0; trial < cfg.search_trials; ++trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<int> length(1, 3);
    std::uniform_int_distribution<int> halvings(1, 5);
    std::normal_distribution<double> gauss;

    Segmentation s = Segmentation::no_information(prior);
    const int splits = length(rng);
    for (int j = 0; j < splits; ++j) {
      std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
      const std::size_t atom = pick(rng);
      Eigen::VectorXd d(k);
      for (Eigen::Index i = 0; i < k; ++i) d[i] = gauss(rng);
      d.normalize();
      const double t = symmetric_step(s.atoms()[atom].market, d) * std::ldexp(1.0, -halvings(rng));
      if (!(t > 0.0) || !std::isfinite(t)) continue;
      s = split_atom(s, atom, d, t);
    }
    double v = 0.0;
    for (const Atom& a : s.atoms()) v += a.weight * value(a.market);
    const double delta = v - v0;
    if (delta > out.tolerance && (!out.improving || delta > out.improving->delta))
      out.improving = Witness{s, delta, trial};
    if (delta < -out.tolerance && (!out.worsening || delta < out.worsening->delta))
      out.worsening = Witness{s, delta, trial};
  }
  return out;
}

StepLimitTable step_limit_regression(const std::vector<double>& eps_list,
                                     std::array<double, 2> values, double alpha) {
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      throw Error(ErrorCode::InvalidParameter, "eps list must be strictly decreasing");
  const WelfareWeight w(alpha);
  StepLimitTable out;
  for (double eps : eps_list) {
    const Family f({DemandSpec::smooth_step(values[0], eps), DemandSpec::smooth_step(values[1], eps)});
    StepLimitRow row{eps, f.partial_inclusion(), classify(f, w)};
    if (!row.partial_inclusion && !out.crossover) out.crossover = eps;
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace segwelfare
