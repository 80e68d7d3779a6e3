#include "segwelfare/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include <boost/random/sobol.hpp>

#include "segwelfare/errors.hpp"

namespace segwelfare {

namespace {

struct Local {
  PriceLocal P;
  std::vector<DerivStack> V;
  double e_vp = 0.0;
  double e_vpp = 0.0;
  Eigen::VectorXd delta_vp;
};

Local local(const Family& family, const Market& m, WelfareWeight w) {
  Local L{price_local(family, m), {}, 0.0, 0.0, {}};
  const std::size_t n = family.size();
  L.V.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    L.V.push_back(v_alpha_derivs(family.spec(i), L.P.price, w));
    L.e_vp += m[i] * L.V[i].d1;
    L.e_vpp += m[i] * L.V[i].d2;
  }
  L.delta_vp.resize(static_cast<Eigen::Index>(n - 1));
  for (std::size_t i = 1; i < n; ++i) {
    L.delta_vp[static_cast<Eigen::Index>(i - 1)] = L.V[i].d1 - L.V[0].d1;
  }
  return L;
}

Eigen::VectorXd x_of(const Local& L) {
  const PriceLocal& P = L.P;
  return 0.5 * L.e_vpp * P.grad + L.delta_vp -
         (L.e_vp / P.e_rpp) * (P.delta_rpp + 0.5 * P.e_rppp * P.grad);
}

Eigen::MatrixXd outer_sym(const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
  const Eigen::MatrixXd xg = x * g.transpose();
  return xg + xg.transpose();
}

Eigen::VectorXd unit_orthogonal_to(const Eigen::VectorXd& g) {
  const Eigen::Index k = g.size();
  if (k == 1) return Eigen::VectorXd::Ones(1);
  const double gn = g.norm();
  if (gn == 0.0) return Eigen::VectorXd::Unit(k, 0);
  const Eigen::VectorXd u = g / gn;
  Eigen::Index axis = 0;
  u.cwiseAbs().minCoeff(&axis);
  Eigen::VectorXd v = Eigen::VectorXd::Unit(k, axis) - u[axis] * u;
  return v / v.norm();
}

// Every composition of `steps` into `parts` nonnegative integers, as markets.
std::vector<Eigen::VectorXd> simplex_lattice(std::size_t parts, std::size_t steps) {
  std::vector<Eigen::VectorXd> out;
  std::vector<std::size_t> c(parts, 0);
  const double N = static_cast<double>(steps);
  auto emit = [&] {
    Eigen::VectorXd mu(static_cast<Eigen::Index>(parts));
    for (std::size_t i = 0; i < parts; ++i) mu[static_cast<Eigen::Index>(i)] = c[i] / N;
    out.push_back(mu);
  };
  // Lexicographic enumeration with the first coordinate absorbing the rest.
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t left) {
    if (i == 0) {
      c[0] = left;
      emit();
      return;
    }
    for (std::size_t k = 0; k <= left; ++k) {
      c[i] = k;
      rec(i - 1, left - k);
    }
  };
  rec(parts - 1, steps);
  return out;
}

template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& f) {
  threads = std::max(1u, threads);
  if (threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct Extremes {
  double lo;
  double hi;
};

Extremes extremes_at(const Family& family, const Eigen::VectorXd& mu, WelfareWeight w) {
  const Local L = local(family, Market(mu), w);
  const Eigenpairs e = eigenpairs(L.P.grad, x_of(L));
  return {e.lambda_lo, e.lambda_hi};
}

// Nelder-Mead over reduced coordinates; points outside the simplex score +inf.
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            Eigen::VectorXd start, double size, int iterations,
                            std::size_t& evals) {
  const Eigen::Index k = start.size();
  std::vector<Eigen::VectorXd> pts{start};
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::VectorXd p = start;
    p[i] += (p[i] + size <= 1.0 ? size : -size);
    pts.push_back(p);
  }
  std::vector<double> val;
  for (auto& p : pts) {
    val.push_back(f(p));
    ++evals;
  }
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return val[a] < val[b]; });
    const std::size_t worst = idx.back();
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
    for (std::size_t j = 0; j + 1 < idx.size(); ++j) centroid += pts[idx[j]];
    centroid /= static_cast<double>(k);
    auto trial = [&](double c) {
      Eigen::VectorXd p = centroid + c * (pts[worst] - centroid);
      ++evals;
      return std::pair{p, f(p)};
    };
    auto [r, fr] = trial(-1.0);
    if (fr < val[idx.front()]) {
      auto [e, fe] = trial(-2.0);
      if (fe < fr) {
        pts[worst] = e;
        val[worst] = fe;
      } else {
        pts[worst] = r;
        val[worst] = fr;
      }
    } else if (fr < val[idx[idx.size() - 2]]) {
      pts[worst] = r;
      val[worst] = fr;
    } else {
      auto [c, fc] = trial(0.5);
      if (fc < val[worst]) {
        pts[worst] = c;
        val[worst] = fc;
      } else {
        const Eigen::VectorXd best = pts[idx.front()];
        for (std::size_t j = 1; j < idx.size(); ++j) {
          pts[idx[j]] = best + 0.5 * (pts[idx[j]] - best);
          val[idx[j]] = f(pts[idx[j]]);
          ++evals;
        }
      }
    }
  }
  const auto best = std::min_element(val.begin(), val.end()) - val.begin();
  return pts[static_cast<std::size_t>(best)];
}

}  // namespace

Eigenpairs eigenpairs(const Eigen::VectorXd& g, const Eigen::VectorXd& x) {
  Eigenpairs e;
  const double gn = g.norm();
  const double xn = x.norm();
  const double gx = g.dot(x);
  e.v_hi = Eigen::VectorXd::Zero(g.size());
  e.v_lo = Eigen::VectorXd::Zero(g.size());
  if (gn * xn == 0.0) return e;
  // Cauchy-Schwarz fixes the signs; rounding can break them when g and x are parallel.
  e.lambda_hi = std::max(gx + gn * xn, 0.0);
  e.lambda_lo = std::min(gx - gn * xn, 0.0);
  e.v_hi = g * xn + gn * x;
  e.v_lo = g * xn - gn * x;
  const double floor = 1e-10 * gn * xn;
  e.hi_defined = e.v_hi.norm() > floor;
  e.lo_defined = e.v_lo.norm() > floor;
  if (!e.hi_defined) e.v_hi.setZero();
  if (!e.lo_defined) e.v_lo.setZero();
  return e;
}

Eigen::VectorXd x_vector(const Family& family, const Market& m, WelfareWeight w) {
  return x_of(local(family, m, w));
}

Eigen::MatrixXd hessian_w(const Family& family, const Market& m, WelfareWeight w) {
  const Local L = local(family, m, w);
  return outer_sym(x_of(L), L.P.grad);
}

CurvatureReport curvature_report(const Family& family, const Market& m, WelfareWeight w) {
  const Local L = local(family, m, w);
  CurvatureReport r{m, L.P.price, L.P.grad, x_of(L), {}, 0.0, 0.0, {}, {}, false, false};
  r.hessian = outer_sym(r.x_vec, r.grad_p);
  const Eigenpairs e = eigenpairs(r.grad_p, r.x_vec);
  r.lambda_hi = e.lambda_hi;
  r.lambda_lo = e.lambda_lo;
  r.v_hi = e.v_hi;
  r.v_lo = e.v_lo;
  r.hi_defined = e.hi_defined;
  r.lo_defined = e.lo_defined;
  return r;
}

HessianTerms hessian_terms(const Family& family, const Market& m, WelfareWeight w) {
  const Local L = local(family, m, w);
  const Eigen::VectorXd& g = L.P.grad;
  HessianTerms t;
  t.within = L.e_vpp * g * g.transpose();
  t.cross = outer_sym(L.delta_vp, g);
  t.curvature = L.e_vp * L.P.hess;
  t.total = t.within + t.cross + t.curvature;
  return t;
}

BoundsReport global_bounds(const Family& family, WelfareWeight w, const BoundsOptions& opt) {
  if (!family.partial_inclusion()) {
    throw Error(ErrorCode::PartialInclusionViolated,
                "the eigenvalue bounds need partial inclusion");
  }
  const std::size_t n = family.size();
  BoundsReport out;
  std::vector<Eigen::VectorXd> pts;
  if (n <= 3) {
    out.method = "lattice";
    pts = simplex_lattice(n, std::max<std::size_t>(opt.resolution, 1));
  } else {
    out.method = "sobol+nelder-mead";
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)));
    }
    pts.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
    boost::random::sobol eng(n);
    const double span = static_cast<double>(eng.max()) - static_cast<double>(eng.min()) + 1.0;
    std::vector<double> u(n);
    for (std::size_t k = 0; k < opt.sobol_points; ++k) {
      Eigen::VectorXd mu(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const double ui = (static_cast<double>(eng() - eng.min()) + 0.5) / span;
        mu[static_cast<Eigen::Index>(i)] = -std::log(ui);
      }
      pts.push_back(mu / mu.sum());
    }
  }

  std::vector<Extremes> ev(pts.size());
  parallel_for(pts.size(), opt.threads, [&](std::size_t i) { ev[i] = extremes_at(family, pts[i], w); });
  out.evaluations = pts.size();

  std::size_t imin = 0, imax = 0;
  for (std::size_t i = 1; i < ev.size(); ++i) {
    if (ev[i].lo < ev[imin].lo) imin = i;
    if (ev[i].hi > ev[imax].hi) imax = i;
  }
  out.min_lambda_lo = ev[imin].lo;
  out.max_lambda_hi = ev[imax].hi;
  out.arg_min = pts[imin];
  out.arg_max = pts[imax];

  if (n > 3 && opt.polish_starts > 0) {
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    auto polish = [&](bool upper) {
      std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        return upper ? ev[a].hi > ev[b].hi : ev[a].lo < ev[b].lo;
      });
      auto objective = [&](const Eigen::VectorXd& r) {
        const double base = 1.0 - r.sum();
        if (r.minCoeff() < 0.0 || base < 0.0) return std::numeric_limits<double>::infinity();
        const Extremes e = extremes_at(family, Market::from_reduced(r).mu(), w);
        return upper ? -e.hi : e.lo;
      };
      for (std::size_t s = 0; s < std::min(opt.polish_starts, order.size()); ++s) {
        const Eigen::VectorXd start = pts[order[s]].tail(static_cast<Eigen::Index>(n - 1));
        const Eigen::VectorXd r = nelder_mead(objective, start, 0.02, 200, out.evaluations);
        const double v = objective(r);
        if (!std::isfinite(v)) continue;
        const Eigen::VectorXd mu = Market::from_reduced(r).mu();
        if (upper && -v > out.max_lambda_hi) {
          out.max_lambda_hi = -v;
          out.arg_max = mu;
        } else if (!upper && v < out.min_lambda_lo) {
          out.min_lambda_lo = v;
          out.arg_min = mu;
        }
      }
    };
    polish(false);
    polish(true);
  }

  out.lower_rate = 0.5 * out.min_lambda_lo;
  out.upper_rate = 0.5 * out.max_lambda_hi;
  if (opt.prior) {
    if (opt.prior->size() != n) throw Error(ErrorCode::WrongDimension, "prior size mismatch");
    const double f = 0.5 * (1.0 - opt.prior->mu().squaredNorm());
    out.magnitude_lower = f * out.min_lambda_lo;
    out.magnitude_upper = f * out.max_lambda_hi;
  }
  if (opt.keep_samples) {
    out.samples.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out.samples.push_back({pts[i], ev[i].hi, ev[i].lo});
  }
  return out;
}

double max_symmetric_step(const Market& m, const Eigen::VectorXd& d) {
  Eigen::VectorXd full(d.size() + 1);
  full[0] = -d.sum();
  full.tail(d.size()) = d;
  double t = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < full.size(); ++i) {
    const double a = std::abs(full[i]);
    if (a > 0.0) t = std::min(t, m.mu()[i] / a);
  }
  return t;
}

Direction best_direction(const Family& family, const Market& m, WelfareWeight w) {
  const CurvatureReport r = curvature_report(family, m, w);
  if (r.lambda_hi == 0.0 && r.lambda_lo == 0.0) {
    throw Error(ErrorCode::UndefinedDirection, "both eigenvalues vanish at this market");
  }
  // An eigenvector that collapses to zero belongs to a zero eigenvalue whose
  // eigenspace is orthogonal to grad p.
  Direction d;
  d.v_best = r.hi_defined ? Eigen::VectorXd(r.v_hi / r.v_hi.norm()) : unit_orthogonal_to(r.grad_p);
  d.v_worst = r.lo_defined ? Eigen::VectorXd(r.v_lo / r.v_lo.norm()) : unit_orthogonal_to(r.grad_p);
  d.gain = r.lambda_hi;
  d.loss = r.lambda_lo;
  d.t_max_best = max_symmetric_step(m, d.v_best);
  d.t_max_worst = max_symmetric_step(m, d.v_worst);
  return d;
}

std::vector<FieldRow> vector_field(const Family& family, WelfareWeight w, std::size_t resolution,
                                   unsigned threads) {
  if (family.size() != 3) {
    throw Error(ErrorCode::WrongDimension, "the vector field is drawn for three types");
  }
  if (!family.partial_inclusion()) {
    throw Error(ErrorCode::PartialInclusionViolated, "the vector field needs partial inclusion");
  }
  std::vector<Eigen::VectorXd> pts;
  for (auto& mu : simplex_lattice(3, std::max<std::size_t>(resolution, 1))) {
    if (mu.minCoeff() >= 1e-3) pts.push_back(mu);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<FieldRow> rows(pts.size());
  parallel_for(pts.size(), threads, [&](std::size_t i) {
    const CurvatureReport r = curvature_report(family, Market(pts[i]), w);
    FieldRow& row = rows[i];
    row.mu = pts[i];
    row.lambda_hi = r.lambda_hi;
    row.lambda_lo = r.lambda_lo;
    row.v_best = r.hi_defined ? Eigen::VectorXd(r.v_hi / r.v_hi.norm())
                              : Eigen::VectorXd::Constant(2, nan);
    row.v_worst = r.lo_defined ? Eigen::VectorXd(r.v_lo / r.v_lo.norm())
                               : Eigen::VectorXd::Constant(2, nan);
  });
  return rows;
}

void write_field_csv(std::ostream& os, const std::vector<FieldRow>& rows, bool scale_by_eigenvalue) {
  const Eigen::Index n = rows.empty() ? 3 : rows.front().mu.size();
  for (Eigen::Index i = 1; i <= n; ++i) os << "mu_" << i << ',';
  for (Eigen::Index i = 2; i <= n; ++i) os << "vbest_" << i << ',';
  for (Eigen::Index i = 2; i <= n; ++i) os << "vworst_" << i << ',';
  os << "lambda_hi,lambda_lo\n";
  char buf[64];
  auto put = [&](double v) {
    if (std::isnan(v)) {
      os << "nan";
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << buf;
    }
  };
  for (const FieldRow& r : rows) {
    for (Eigen::Index i = 0; i < r.mu.size(); ++i) {
      put(r.mu[i]);
      os << ',';
    }
    const double sb = scale_by_eigenvalue ? std::abs(r.lambda_hi) : 1.0;
    const double sw = scale_by_eigenvalue ? std::abs(r.lambda_lo) : 1.0;
    for (Eigen::Index i = 0; i < r.v_best.size(); ++i) {
      put(sb * r.v_best[i]);
      os << ',';
    }
    for (Eigen::Index i = 0; i < r.v_worst.size(); ++i) {
      put(sw * r.v_worst[i]);
      os << ',';
    }
    put(r.lambda_hi);
    os << ',';
    put(r.lambda_lo);
    os << '\n';
  }
}

}  // namespace segwelfare
