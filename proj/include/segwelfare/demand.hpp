#pragma once

// Demand curves for a single consumer type.
//
// A DemandSpec couples a parametric family with an explicit support
// I = [p_lo, p_hi]. Outside the support demand is extended flat below p_lo
// and by zero above p_hi, and all derivatives of the extension are zero.

#include <cstddef>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "segwelfare/tolerances.hpp"

namespace segwelfare {

struct PriceInterval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double p) const { return p >= lo && p <= hi; }
  double width() const { return hi - lo; }
};

/// Value and the first three derivatives of a scalar function of price.
struct DerivStack {
  double d0 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

enum class DemandFamily {
  LinearShift,         // a - p + c/p on [delta, a]
  ConstantElasticity,  // (c + p)^(-theta), truncated
  PowerUnit,           // 1 - p^theta on [0, 1]
  AffineOfBase,        // scale * D0(p) + shift over a shared base curve
  Tabulated,           // monotone cubic through (price, quantity) pairs
  PowerDensity,        // integral over [p, p_hi] of c1 (c2 + c3 z)^c4 / z^2
  SmoothStep,          // cubic ramp from 1 to 0 on [v - width, v]
};

std::string to_string(DemandFamily family);

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes. Preserves
/// monotonicity of the data.
class MonotoneSpline {
 public:
  MonotoneSpline(std::vector<double> x, std::vector<double> y);

  double value(double x) const;
  double slope(double x) const;
  double curvature(double x) const;
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::size_t segment(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
};

class DemandSpec;

struct LinearShiftParams {
  double a;
  double c;
};
struct ConstantElasticityParams {
  double c;
  double theta;
};
struct PowerUnitParams {
  double theta;
};
struct PowerDensityParams {
  double c1, c2, c3, c4;
};
struct SmoothStepParams {
  double value;
  double width;
  double slope0;  // |D_p| at the bottom of the ramp, in units of 1/width
};
struct AffineParams {
  std::shared_ptr<const DemandSpec> base;
  double scale;
  double shift;
};
struct TabulatedParams {
  std::shared_ptr<const MonotoneSpline> curve;
};

using DemandParams = std::variant<LinearShiftParams, ConstantElasticityParams, PowerUnitParams,
                                  AffineParams, TabulatedParams, PowerDensityParams,
                                  SmoothStepParams>;

/// Immutable description of one type's demand curve.
class DemandSpec {
 public:
  /// `p_lo` defaults to 1e-3 * a.
  static DemandSpec linear_shift(double a, double c, std::optional<double> p_lo = {});
  /// `p_hi` defaults to the revenue inflection point 2c/(theta - 1).
  static DemandSpec constant_elasticity(double c, double theta, std::optional<double> p_hi = {},
                                        double p_lo = 0.0);
  static DemandSpec power_unit(double theta);
  static DemandSpec power_density(double c1, double c2, double c3, double c4, PriceInterval support);
  /// Unit demand for a good worth `value`, smoothed over a ramp of `width`.
  static DemandSpec smooth_step(double value, double width);
  static DemandSpec affine_of_base(std::shared_ptr<const DemandSpec> base, double scale,
                                   double shift);
  static DemandSpec tabulated(std::vector<double> prices, std::vector<double> quantities);
  /// Two columns (price, quantity), optional header row, strictly increasing price.
  static DemandSpec tabulated_csv(const std::filesystem::path& path);

  DemandFamily family() const;
  const DemandParams& params() const { return params_; }
  const PriceInterval& support() const { return support_; }
  std::string describe() const;

 private:
  DemandSpec(DemandParams params, PriceInterval support);

  DemandParams params_;
  PriceInterval support_;
};

/// D and its first three price derivatives, with the flat/zero extension
/// outside the support. Throws NonFiniteValue.
DerivStack demand_derivs(const DemandSpec& spec, double p);

/// R = pD and derivatives. Throws OutOfSupport when p is outside the support.
DerivStack revenue_derivs(const DemandSpec& spec, double p);

/// Revenue pD(p) at any nonnegative price, using the extension.
double revenue_value(const DemandSpec& spec, double p);

/// Integral of D from p to the top of the support.
double consumer_surplus(const DemandSpec& spec, double p);

/// Unique root of R_p on the support. Throws NoInteriorRoot.
double monopoly_price(const DemandSpec& spec, const Tolerances& tol = default_tolerances());

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double worst_margin = 0.0;  // the worst value observed for the checked quantity
  double at_price = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::optional<double> monopoly_price;

  bool passed() const;
  const ValidationCheck* find(const std::string& name) const;
};

/// Checks monotonicity, strict revenue concavity and an interior monopoly
/// price on a midpoint grid of `grid_n` cells over the support.
ValidationReport validate_assumption1(const DemandSpec& spec, std::size_t grid_n = 512,
                                      const Tolerances& tol = default_tolerances());

}  // namespace segwelfare
