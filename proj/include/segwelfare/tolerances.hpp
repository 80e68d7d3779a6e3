#pragma once

#include <cstddef>

namespace segwelfare {

struct Tolerances {
  double root = 1e-10;        // |R_p| at an accepted monopoly or market price
  double mono = 1e-9;         // demand slope must stay below -mono
  double conc = 1e-9;         // revenue curvature must stay below -conc
  double mono_expr = 1e-8;    // relative band for monotonicity of the binary expression
  double span = 1e-6;         // relative residual accepted by the spanning fit
  double simplex = 1e-12;     // probability vectors
  double bayes = 1e-10;       // Bayes plausibility, per coordinate
  double fd_rel_step = 1e-4;  // finite-difference step for tabulated demand, relative to price scale
  double imb_upper = 1e-6;    // absolute band for "upper rate bound is zero"
  std::size_t validate_grid = 512;
  std::size_t expression_grid = 400;
  std::size_t fallback_grid = 2048;
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

}  // namespace segwelfare
