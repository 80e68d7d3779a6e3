#pragma once

#include <cmath>
#include <vector>

#include "segwelfare/demand.hpp"
#include "segwelfare/market.hpp"

namespace fixtures {

using segwelfare::DemandSpec;
using segwelfare::Family;

inline DemandSpec ces4(double theta) { return DemandSpec::constant_elasticity(1.0, theta, 4.0); }

inline Family ces_family(const std::vector<double>& thetas, double p_hi = 4.0) {
  std::vector<DemandSpec> specs;
  for (double t : thetas) specs.push_back(DemandSpec::constant_elasticity(1.0, t, p_hi));
  return Family(specs);
}

inline Family power_unit_family(const std::vector<double>& thetas) {
  std::vector<DemandSpec> specs;
  for (double t : thetas) specs.push_back(DemandSpec::power_unit(t));
  return Family(specs);
}

inline Family linear_pair(double c1, double c2, double a = 1.0) {
  return Family({DemandSpec::linear_shift(a, c1), DemandSpec::linear_shift(a, c2)});
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace fixtures
