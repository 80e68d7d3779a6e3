#pragma once

#include <cmath>
#include <limits>
#include <utility>

namespace segwelfare::detail {

/// Root of a function that is decreasing on [lo, hi] with f(lo) >= 0 >= f(hi).
/// `f` returns (value, derivative). Newton steps are taken when they stay
/// inside the current bracket, bisection otherwise; iteration stops when the
/// bracket collapses to a few ulps.
template <class F>
double decreasing_root(F&& f, double lo, double hi, int max_iter = 300) {
  if (hi <= lo) return lo;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    const auto [v, dv] = f(x);
    if (v == 0.0) return x;
    if (v > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double scale = std::max(1.0, std::abs(x));
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * scale) break;
    double next = 0.5 * (lo + hi);
    if (dv < 0.0 && std::isfinite(dv)) {
      const double newton = x - v / dv;
      if (std::abs(newton - x) <= 2.0 * std::numeric_limits<double>::epsilon() * scale &&
          newton >= lo && newton <= hi) {
        return newton;
      }
      if (newton > lo && newton < hi) next = newton;
    }
    if (next == x) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

}  // namespace segwelfare::detail
