#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "segwelfare/demand.hpp"
#include "segwelfare/errors.hpp"
#include "support.hpp"

using namespace segwelfare;
using fixtures::rel;

namespace {

// Central differences of each level of the stack against the next.
void check_stack(const DemandSpec& s, double p, double h, double tol) {
  const DerivStack a = demand_derivs(s, p - h);
  const DerivStack b = demand_derivs(s, p + h);
  const DerivStack m = demand_derivs(s, p);
  CHECK(std::abs((b.d0 - a.d0) / (2 * h) - m.d1) <= tol * std::max(1.0, std::abs(m.d1)));
  CHECK(std::abs((b.d1 - a.d1) / (2 * h) - m.d2) <= tol * std::max(1.0, std::abs(m.d2)));
  CHECK(std::abs((b.d2 - a.d2) / (2 * h) - m.d3) <= tol * std::max(1.0, std::abs(m.d3)));
}

}  // namespace

TEST_SUITE("demand") {
  TEST_CASE("monopoly prices of the parametric families") {
    CHECK(monopoly_price(fixtures::ces4(1.5)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(monopoly_price(fixtures::ces4(2.0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(monopoly_price(DemandSpec::linear_shift(1.0, 0.2)) == doctest::Approx(0.5).epsilon(1e-12));
    for (double th : {0.01, 0.3, 0.9, 2.0})
      CHECK(monopoly_price(DemandSpec::power_unit(th)) ==
            doctest::Approx(std::pow(1.0 + th, -1.0 / th)).epsilon(1e-12));
  }

  TEST_CASE("derivative stacks agree with finite differences") {
    check_stack(fixtures::ces4(1.7), 1.3, 1e-5, 1e-6);
    check_stack(DemandSpec::linear_shift(1.0, 0.2), 0.4, 1e-5, 1e-6);
    check_stack(DemandSpec::power_unit(0.3), 0.5, 1e-5, 1e-6);
    check_stack(DemandSpec::power_density(1, 1, 1, 1, {0.1, 2.0}), 0.7, 1e-5, 1e-6);
    check_stack(DemandSpec::power_density(1, 3, -1, -2, {0.1, 2.0}), 0.7, 1e-5, 1e-6);
    check_stack(DemandSpec::smooth_step(1.0, 0.5), 0.8, 1e-5, 1e-6);
    auto base = std::make_shared<const DemandSpec>(fixtures::ces4(1.6));
    check_stack(DemandSpec::affine_of_base(base, 2.0, 0.1), 1.1, 1e-5, 1e-6);
  }

  TEST_CASE("extension outside the support is flat below and zero above") {
    const DemandSpec s = DemandSpec::linear_shift(1.0, 0.2, 0.05);
    const DerivStack below = demand_derivs(s, 0.01);
    CHECK(below.d0 == doctest::Approx(demand_derivs(s, 0.05).d0));
    CHECK(below.d1 == 0.0);
    CHECK(below.d2 == 0.0);
    const DerivStack above = demand_derivs(fixtures::ces4(2.0), 5.0);
    CHECK(above.d0 == 0.0);
    CHECK(above.d1 == 0.0);
    CHECK_THROWS_AS(demand_derivs(s, -0.1), Error);
  }

  TEST_CASE("consumer surplus closed forms") {
    // PowerUnit: integral of 1 - z^theta from p to 1.
    const double th = 0.3, p = 0.4;
    const double cs = (1 - p) - (1 - std::pow(p, th + 1)) / (th + 1);
    CHECK(consumer_surplus(DemandSpec::power_unit(th), p) == doctest::Approx(cs).epsilon(1e-12));
    // CES truncated at 4: ((1+p)^(1-theta) - 5^(1-theta)) / (theta - 1).
    const double c2 = (std::pow(2.0, -0.7) - std::pow(5.0, -0.7)) / 0.7;
    CHECK(consumer_surplus(fixtures::ces4(1.7), 1.0) == doctest::Approx(c2).epsilon(1e-12));
    CHECK(consumer_surplus(fixtures::ces4(1.7), 4.5) == 0.0);
  }

  TEST_CASE("smooth step ramps from one to zero") {
    const DemandSpec s = DemandSpec::smooth_step(1.25, 0.5);
    CHECK(demand_derivs(s, 0.75).d0 == doctest::Approx(1.0));
    CHECK(demand_derivs(s, 1.25).d0 == doctest::Approx(0.0));
    CHECK(validate_assumption1(s).passed());
    CHECK_THROWS_AS(DemandSpec::smooth_step(1.0, 1.5), Error);
  }

  TEST_CASE("validation names the failing check") {
    SUBCASE("CES passes only when truncated below its revenue inflection 2c/(theta-1)") {
      for (double th : {1.5, 1.6, 1.8, 2.0}) CHECK(validate_assumption1(fixtures::ces4(th)).passed() == (th <= 1.5));
      CHECK(validate_assumption1(DemandSpec::constant_elasticity(1.0, 2.0, 2.0)).passed());
    }
    SUBCASE("untruncated CES loses revenue concavity") {
      const ValidationReport r = validate_assumption1(DemandSpec::constant_elasticity(1.0, 2.0, 50.0));
      CHECK_FALSE(r.passed());
      REQUIRE(r.find("concave_revenue") != nullptr);
      CHECK_FALSE(r.find("concave_revenue")->passed);
      CHECK(r.find("monotone")->passed);
    }
    SUBCASE("no interior monopoly price") {
      const ValidationReport r =
          validate_assumption1(DemandSpec::power_density(1, 1, 1, 1, {0.5, 2.0}));
      CHECK_FALSE(r.find("interior_monopoly_price")->passed);
      CHECK_THROWS_AS(monopoly_price(DemandSpec::power_density(1, 1, 1, 1, {0.5, 2.0})), Error);
    }
  }

  TEST_CASE("parameter checks") {
    CHECK_THROWS_AS(DemandSpec::constant_elasticity(-1.0, 2.0), Error);
    CHECK_THROWS_AS(DemandSpec::power_density(1, 1, 1, -1, {0.1, 2.0}), Error);
    CHECK_THROWS_AS(DemandSpec::tabulated({0, 1, 2}, {1.0, 1.0, 0.0}), Error);
    try {
      DemandSpec::power_unit(-1.0);
      FAIL("expected InvalidParameter");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidParameter);
    }
  }

  TEST_CASE("monotone spline keeps data monotone") {
    const MonotoneSpline sp({0, 1, 2, 3}, {3.0, 2.9, 1.0, 0.0});
    double prev = sp.value(0.0);
    for (int k = 1; k <= 300; ++k) {
      const double v = sp.value(3.0 * k / 300.0);
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
    CHECK(sp.value(2.0) == doctest::Approx(1.0));
  }

  TEST_CASE("tabulated demand from CSV tracks the curve it samples") {
    const auto path = std::filesystem::temp_directory_path() / "segwelfare_tab.csv";
    {
      std::ofstream os(path);
      os << "price,quantity\n";
      for (int k = 0; k <= 40; ++k) {
        const double p = 0.05 * k;
        os << p << "," << 2.0 - p << "\n";
      }
    }
    const DemandSpec s = DemandSpec::tabulated_csv(path);
    std::filesystem::remove(path);
    CHECK(s.family() == DemandFamily::Tabulated);
    CHECK(s.support().hi == doctest::Approx(2.0));
    CHECK(demand_derivs(s, 0.73).d0 == doctest::Approx(1.27).epsilon(1e-9));
    CHECK(monopoly_price(s) == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("tabulated CSV errors carry the line") {
    const auto path = std::filesystem::temp_directory_path() / "segwelfare_bad.csv";
    {
      std::ofstream os(path);
      os << "0,1\n1,oops\n";
    }
    try {
      DemandSpec::tabulated_csv(path);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
    std::filesystem::remove(path);
  }
}
