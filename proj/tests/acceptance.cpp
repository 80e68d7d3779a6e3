// Acceptance run: one PASS/FAIL line per criterion. Exit status is 1 when any line fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "segwelfare/commands.hpp"
#include "segwelfare/config.hpp"
#include "segwelfare/curvature.hpp"
#include "segwelfare/errors.hpp"
#include "segwelfare/monotonicity.hpp"
#include "segwelfare/oracles.hpp"
#include "segwelfare/welfare.hpp"

using namespace segwelfare;

namespace {

const std::string kConfigs = SEGWELFARE_CONFIGS;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Family ces(const std::vector<double>& thetas, double p_hi = 4.0) {
  std::vector<DemandSpec> specs;
  for (double t : thetas) specs.push_back(DemandSpec::constant_elasticity(1.0, t, p_hi));
  return Family(specs);
}

Family linear(double c1, double c2) {
  return Family({DemandSpec::linear_shift(1.0, c1), DemandSpec::linear_shift(1.0, c2)});
}

Family density(double c2, double c3, double c4) {
  auto base = std::make_shared<const DemandSpec>(DemandSpec::power_density(1, c2, c3, c4, {0.1, 2.0}));
  return Family({DemandSpec::affine_of_base(base, 1.0, 0.0), DemandSpec::affine_of_base(base, 2.0, 0.1)});
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Relative error, floored so exactly-zero references (linear demand has no price curvature)
// are judged against finite-difference noise rather than zero.
double rel_norm(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-4);
}

// One-sided second-order slope of the binary expression at p, stepping by h.
double expression_slope(const Family& f, double p, double h, WelfareWeight w) {
  return (-3 * binary_expression(f, p, w) + 4 * binary_expression(f, p + h, w) -
          binary_expression(f, p + 2 * h, w)) /
         (2 * h);
}

// Bisection on a predicate that is false at lo and true at hi.
double bisect(const std::function<bool(double)>& pred, double lo, double hi, int iters = 30) {
  for (int k = 0; k < iters; ++k) {
    const double mid = 0.5 * (lo + hi);
    (pred(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

Eigen::VectorXd unit_direction(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> n01;
  Eigen::VectorXd d(dim);
  for (Eigen::Index i = 0; i < dim; ++i) d[i] = n01(rng);
  return d.normalized();
}

Eigen::VectorXd full_coords(const Eigen::VectorXd& reduced) {
  Eigen::VectorXd v(reduced.size() + 1);
  v[0] = -reduced.sum();
  v.tail(reduced.size()) = reduced;
  return v;
}

void criterion1() {
  const auto t0 = Clock::now();
  const CommandOutput out = cmd_bounds(load_config(kConfigs + "/ces_table.json"));
  const double secs = seconds_since(t0);
  const double lower[] = {-0.460, -0.395, -0.332, -0.282};
  const double upper[] = {4.6e-5, 1.47e-4, 2.19e-4, 1.48e-4};
  bool ok = out.exit_code == 0 && secs <= 60.0;
  std::string detail;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& row = out.report["table"][k];
    const double lo = row["lower_rate"].get<double>();
    const double hi = row["upper_rate"].get<double>();
    ok = ok && rel(lo, lower[k]) <= 0.05 && hi > 0.0 && hi <= 3.0 * upper[k] && hi >= upper[k] / 3.0;
    detail += row["family"].get<std::string>() + " [" + fmt("%.4g", lo) + ", " + fmt("%.3g", hi) + "] ";
  }
  report(1, ok, "CES table (target -0.460 -0.395 -0.332 -0.282), got " + detail + fmt("in %.1fs", secs));
}

void criterion2() {
  const WelfareWeight w(0.5);
  const bool imb = check_binary(ces({2.0, 1.6}), w).verdict == Verdict::IMB;
  const bool nonmono = check_binary(ces({2.15, 1.6}), w).verdict == Verdict::NonMonotone;

  // Sign of the slope at the type-L monopoly price, approached from below.
  const double p_hi = 1.0 / 0.6;
  auto rises = [&](double th1) { return expression_slope(ces({th1, 1.6}), p_hi, -1e-5, w) > 0.0; };
  const double flip = bisect(rises, 1.9, 2.4);

  double worst = 0.0;
  const double c = 1.0;
  for (const auto& [thH, thL] : {std::pair{2.0, 1.6}, std::pair{2.15, 1.6}, std::pair{1.9, 1.7}}) {
    const Family f = ces({thH, thL});
    const double low = -(2 * thH - 2 * thL + 1) * (thH - thL) *
                       std::pow(c * thH / (thH - 1), 1 - thL) / (2 * c * thH * thH);
    const double high = (2 * thH - 2 * thL - 1) * (thH - thL) *
                        std::pow(c * thL / (thL - 1), 1 - thH) / (2 * c * thL * thL);
    worst = std::max(worst, rel(expression_slope(f, c / (thH - 1), 1e-5, w), low));
    worst = std::max(worst, rel(expression_slope(f, c / (thL - 1), -1e-5, w), high));
  }
  const bool ok = imb && nonmono && std::abs(flip - 2.1) <= 0.01 && worst <= 1e-6;
  report(2, ok,
         std::string("2.0 ") + (imb ? "IMB" : "not IMB") + ", 2.15 " + (nonmono ? "NonMonotone" : "monotone") +
             ", slope flips at " + fmt("%.5f", flip) + ", endpoint slope rel err " + fmt("%.2e", worst));
}

void criterion3() {
  bool ok = true;
  for (double a : {0.25, 0.5, 1.0}) {
    const WelfareWeight w(a);
    ok = ok && classify(linear(0.2, 0.0), w).img();
    ok = ok && concavification_scan(linear(0.2, 0.0), w).convex;
  }
  for (double a : {0.5, 0.75, 1.0}) {
    const WelfareWeight w(a);
    ok = ok && classify(linear(0.0, 0.2), w).imb();
    ok = ok && concavification_scan(linear(0.0, 0.2), w).concave;
  }
  const std::string v = to_string(classify(linear(0.2, 0.0), WelfareWeight(0.5)).verdict);
  report(3, ok, "linear shifts: (0.2, 0) -> " + v + " (IMG holds), (0, 0.2) -> IMB; scans agree");
}

void criterion4() {
  const Family f = ces({1.5, 1.7, 2.0});
  const MonotonicityVerdict v = classify(f, WelfareWeight(0.5));
  OracleConfig cfg;
  cfg.seed = 7;
  cfg.search_trials = 500;
  const WitnessResult r = witness_search(f, Market::uniform(3), WelfareWeight(0.5), cfg);
  const bool ok = v.verdict == Verdict::NonMonotone && v.failed == FailedCondition::Spanning &&
                  r.improving.has_value() && r.worsening.has_value();
  std::string detail = "failed=" + to_string(v.failed);
  if (r.improving) detail += fmt(", improving %.3g", r.improving->delta) + " at trial " + std::to_string(r.improving->trial);
  if (r.worsening) detail += fmt(", worsening %.3g", r.worsening->delta) + " at trial " + std::to_string(r.worsening->trial);
  report(4, ok, detail);
}

// Draws a family of n types that satisfies partial inclusion.
Family random_family(std::mt19937_64& rng, std::size_t n, int kind) {
  std::uniform_real_distribution<double> u01;
  auto U = [&](double a, double b) { return a + (b - a) * u01(rng); };
  for (;;) {
    std::vector<DemandSpec> specs;
    if (kind == 0) {
      std::vector<double> th(n);
      for (double& t : th) t = U(1.5, 2.0);
      const double p_hi = 2.0 / (*std::max_element(th.begin(), th.end()) - 1.0);
      for (double t : th) specs.push_back(DemandSpec::constant_elasticity(1.0, t, p_hi));
    } else if (kind == 1) {
      for (std::size_t i = 0; i < n; ++i) specs.push_back(DemandSpec::power_unit(U(0.05, 2.0)));
    } else if (kind == 2) {
      for (std::size_t i = 0; i < n; ++i) specs.push_back(DemandSpec::linear_shift(U(0.6, 1.4), U(0.0, 0.6)));
    } else if (kind == 3) {
      const double th = U(1.5, 2.0);
      auto base = std::make_shared<const DemandSpec>(DemandSpec::constant_elasticity(1.0, th, 2.0 / (th - 1.0)));
      for (std::size_t i = 0; i < n; ++i) specs.push_back(DemandSpec::affine_of_base(base, U(0.5, 2.0), U(0.0, 0.3)));
    } else {
      for (std::size_t i = 0; i < n; ++i)
        specs.push_back(i % 2 == 0 ? DemandSpec::linear_shift(U(0.6, 1.4), U(0.0, 0.6)) : DemandSpec::power_unit(U(0.05, 2.0)));
    }
    try {
      Family f(specs);
      bool valid = f.partial_inclusion();
      for (std::size_t i = 0; i < n; ++i) valid = valid && f.validation(i).passed();
      if (valid) return f;
    } catch (const Error&) {
    }
  }
}

Market random_market(std::mt19937_64& rng, std::size_t n) {
  std::gamma_distribution<double> g(2.0);
  for (;;) {
    Eigen::VectorXd mu(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = g(rng);
    mu /= mu.sum();
    if (mu.minCoeff() >= 0.05) return Market(mu);
  }
}

void criterion5() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240501);
  double e_grad = 0, e_hp = 0, e_hw = 0, e_eig = 0, e_third = 0;
  int sign_bad = 0;
  OracleConfig fd;
  fd.fd_step = 1e-3;
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 3);
    const Family f = random_family(rng, n, (k / 3) % 5);
    const Market m = random_market(rng, n);
    const WelfareWeight w(std::uniform_real_distribution<double>(0.05, 1.0)(rng));

    e_grad = std::max(e_grad, rel_norm(fd_price_gradient(f, m, 1e-5), price_gradient(f, m)));
    e_hp = std::max(e_hp, rel_norm(fd_price_hessian(f, m, 1e-3), price_hessian(f, m)));
    const Eigen::MatrixXd H = hessian_w(f, m, w);
    e_hw = std::max(e_hw, rel_norm(fd_value_hessian(f, m, w, fd), H));

    const CurvatureReport c = curvature_report(f, m, w);
    const JacobiResult j = jacobi_eigen(H);
    const Eigen::Index last = j.values.size() - 1;
    const double scale = std::max(H.norm(), 1e-300);
    e_eig = std::max({e_eig, std::abs(c.lambda_hi - std::max(j.values[0], 0.0)) / scale,
                      std::abs(c.lambda_lo - std::min(j.values[last], 0.0)) / scale});
    if (c.lambda_lo > 0.0 || c.lambda_hi < 0.0) ++sign_bad;
    if (last >= 2) {
      Eigen::VectorXd mags = j.values.cwiseAbs();
      std::sort(mags.data(), mags.data() + mags.size(), std::greater<>());
      e_third = std::max(e_third, mags[2] / scale);
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = e_grad <= 1e-4 && e_hp <= 1e-4 && e_hw <= 1e-4 && e_eig <= 1e-8 && sign_bad == 0 &&
                  e_third <= 1e-8 && secs <= 120.0;
  report(5, ok,
         "200 families: grad " + fmt("%.1e", e_grad) + ", hess p " + fmt("%.1e", e_hp) + ", hess W " +
             fmt("%.1e", e_hw) + ", eigen " + fmt("%.1e", e_eig) + ", third " + fmt("%.1e", e_third) +
             ", sign violations " + std::to_string(sign_bad) + fmt(", %.1fs", secs));
}

void criterion6() {
  const Family f = ces({1.5, 1.7, 2.0});
  const WelfareWeight w(0.5);
  const Market prior = Market::uniform(3);
  BoundsOptions opt;
  opt.prior = prior;
  const BoundsReport b = global_bounds(f, w, opt);
  const double slack = 1e-6;

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u01;
  const Segmentation s0 = Segmentation::no_information(prior);
  const double v0 = segmentation_value(f, s0, w);
  int rate_bad = 0, mag_bad = 0, checks = 0;
  double worst_rate = 0.0;
  for (int chain = 0; chain < 100; ++chain) {
    Segmentation s = s0;
    const int links = 1 + static_cast<int>(u01(rng) * 4);
    for (int l = 0; l < links; ++l) {
      const std::size_t k = static_cast<std::size_t>(u01(rng) * s.size());
      const Eigen::VectorXd d = unit_direction(rng, 2);
      const double t = (0.05 + 0.9 * u01(rng)) * max_symmetric_step(s.atoms()[k].market, d);
      const Segmentation next = split_atom(s, k, d, t);
      for (const Segmentation* coarse : std::array<const Segmentation*, 2>{&s, &s0}) {
        const double r = delta_v_rate(f, next, *coarse, w);
        worst_rate = std::max({worst_rate, b.lower_rate - r, r - b.upper_rate});
        if (r < b.lower_rate - slack || r > b.upper_rate + slack) ++rate_bad;
        ++checks;
      }
      const double dv = segmentation_value(f, next, w) - v0;
      if (dv < *b.magnitude_lower - slack || dv > *b.magnitude_upper + slack) ++mag_bad;
      s = next;
    }
  }
  report(6, rate_bad == 0 && mag_bad == 0,
         std::to_string(checks) + " rate checks in [" + fmt("%.4g", b.lower_rate) + ", " + fmt("%.3g", b.upper_rate) +
             "], " + std::to_string(rate_bad) + " outside, " + std::to_string(mag_bad) +
             " magnitude violations, worst excess " + fmt("%.1e", std::max(worst_rate, 0.0)));
}

void criterion7() {
  const Family f({DemandSpec::power_unit(0.01), DemandSpec::power_unit(0.3), DemandSpec::power_unit(0.9)});
  const WelfareWeight w(1.0);
  const Market prior = Market::uniform(3);
  const Segmentation s0 = Segmentation::no_information(prior);
  const Direction d = best_direction(f, prior, w);
  const double eps = 0.05;

  const double t_best = 0.9 * d.t_max_best;
  const Segmentation best = epsilon_contract(split_atom(s0, 0, d.v_best, t_best), prior, eps);
  const double v_best = segmentation_value(f, best, w);
  const double info = t_best * full_coords(d.v_best).norm();

  std::mt19937_64 rng(16);
  int wins = 0, drawn = 0;
  while (drawn < 16) {
    const Eigen::VectorXd u = unit_direction(rng, 2);
    const double t = info / full_coords(u).norm();
    if (t >= max_symmetric_step(prior, u)) continue;
    const Segmentation s = epsilon_contract(split_atom(s0, 0, u, t), prior, eps);
    if (v_best >= segmentation_value(f, s, w)) ++wins;
    ++drawn;
  }

  const BoundsReport b = global_bounds(f, w);
  const double gain = b.max_lambda_hi, loss = std::abs(b.min_lambda_lo);
  const bool ok = wins >= 15 && rel(gain, 1.25) <= 0.2 && rel(loss, 0.002) <= 0.2 && gain / loss > 100.0;
  report(7, ok,
         "v_best wins " + std::to_string(wins) + "/16, max gain " + fmt("%.4g", gain) + " (target 1.25), max |loss| " +
             fmt("%.4g", loss) + " (target 0.002), ratio " + fmt("%.0f", gain / loss));
}

void criterion8() {
  std::vector<double> alphas;
  for (int k = 1; k <= 20; ++k) alphas.push_back(0.05 * k);
  int violations = 0;
  for (const Family& f : {ces({2.0, 1.6}), ces({2.15, 1.6}), linear(0.2, 0.0), linear(0.0, 0.2)}) {
    const std::vector<AlphaVerdict> rows = alpha_monotone_scan(f, alphas);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[j].alpha <= rows[i].alpha && rows[i].verdict.img() && !rows[j].verdict.img()) ++violations;
        if (rows[j].alpha >= rows[i].alpha && rows[i].verdict.imb() && !rows[j].verdict.imb()) ++violations;
      }
  }
  report(8, violations == 0, "4 families x 20 weights, " + std::to_string(violations) + " ordering violations");
}

void criterion9() {
  bool ok = true;
  std::string detail;
  for (const auto& [fam, target] : {std::pair{density(1, 1, 1), 1.0 / 3.0}, std::pair{density(3, -1, -2), 2.0 / 3.0}}) {
    const Family& f = fam;
    auto is_imb = [&](double a) { return classify(f, WelfareWeight(a)).imb(); };
    const bool ends = !is_imb(0.05) && is_imb(0.95);
    const double flip = bisect(is_imb, 0.05, 0.95, 20);
    const std::optional<double> hat = classify_affine(f, WelfareWeight(0.5)).alpha_hat;
    ok = ok && ends && std::abs(flip - target) <= 0.01 && hat && std::abs(*hat - target) <= 1e-9;
    detail += fmt("flip %.4f", flip) + fmt(" (expect %.4f) ", target);
  }
  report(9, ok, detail);
}

void criterion10() {
  std::vector<double> eps;
  for (int k = 20; k >= 1; --k) eps.push_back(0.05 * k);
  const StepLimitTable t = step_limit_regression(eps);
  bool ok = t.crossover.has_value() && t.rows.front().partial_inclusion;
  for (const StepLimitRow& r : t.rows) {
    ok = ok && r.partial_inclusion == (t.crossover && r.eps > *t.crossover);
    if (!r.partial_inclusion) ok = ok && r.verdict.verdict == Verdict::NonMonotone;
  }
  report(10, ok, t.crossover ? fmt("inclusion fails for eps <= %.2f, NonMonotone there", *t.crossover)
                             : std::string("no crossover"));
}

}  // namespace

int main() {
  const std::vector<void (*)()> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                            criterion6, criterion7, criterion8, criterion9, criterion10};
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    try {
      criteria[k]();
    } catch (const std::exception& e) {
      report(static_cast<int>(k + 1), false, std::string("threw: ") + e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}
