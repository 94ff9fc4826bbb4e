#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "multiflow/pressure.hpp"

using namespace multiflow;

TEST(Pressure, PolytropicValues) {
  EXPECT_DOUBLE_EQ(pressure_eval(PressureLaw::polytropic(1, 2), 2.0), 4.0);
  EXPECT_DOUBLE_EQ(pressure_eval(PressureLaw::polytropic(3, 1.7), 0.0), 0.0);
  EXPECT_NEAR(pressure_eval(PressureLaw::polytropic(1, 1.4), 1.7), static_cast<double>(std::pow(static_cast<long double>(1.7), static_cast<long double>(1.4))), 1e-15);
  EXPECT_NEAR(pressure_derivative(PressureLaw::polytropic(2, 3), 1.5), 2 * 3 * 1.5 * 1.5, 1e-14);
}

TEST(Pressure, ConstructionRejectsBadParameters) {
  EXPECT_THROW(PressureLaw::polytropic(0, 2), ConfigError);
  EXPECT_THROW(PressureLaw::polytropic(1, 1.0), ConfigError);
  EXPECT_THROW(PressureLaw::polytropic(std::nan(""), 2), InvalidInputError);
  EXPECT_THROW(PressureLaw::tabulated({1, 2}, {1}), ConfigError);
  EXPECT_THROW(PressureLaw::tabulated({1}, {1}), ConfigError);
  EXPECT_THROW(PressureLaw::tabulated({1, 1}, {1, 2}), ConfigError);
  EXPECT_THROW(PressureLaw::tabulated({1, 2}, {2, 1}), ConfigError);
}

TEST(Pressure, ExistenceThresholdFlag) {
  EXPECT_TRUE(PressureLaw::polytropic(1, 1.6).above_existence_threshold());
  EXPECT_FALSE(PressureLaw::polytropic(1, 1.4).above_existence_threshold());
  EXPECT_FALSE(PressureLaw::polytropic(1, 1.5).above_existence_threshold());
}

TEST(Pressure, NegativeDensityIsADomainError) {
  const auto law = PressureLaw::polytropic(1, 2);
  EXPECT_THROW(pressure_eval(law, -1e-3), DomainError);
  EXPECT_THROW(pressure_derivative(law, -1.0), DomainError);
  EXPECT_THROW(pressure_potential(law, 0.0), DomainError);
  EXPECT_THROW(pressure_potential(law, -2.0), DomainError);
}

TEST(Pressure, PolytropicPotentialClosedForm) {
  EXPECT_DOUBLE_EQ(pressure_potential(PressureLaw::polytropic(1, 2), 3.0), 9.0);
  EXPECT_DOUBLE_EQ(pressure_potential(PressureLaw::polytropic(1, 2), 1.0), 1.0);
  // rho P' - P = p, checked by central differences.
  const auto law = PressureLaw::polytropic(0.7, 1.6);
  for (double r : {0.2, 1.0, 3.5}) {
    const double h = 1e-5 * r;
    const double dp = (pressure_potential(law, r + h) - pressure_potential(law, r - h)) / (2 * h);
    EXPECT_NEAR(r * dp - pressure_potential(law, r), pressure_eval(law, r), 1e-8);
  }
}

TEST(Pressure, TabulatedInterpolationAndClamp) {
  const auto law = PressureLaw::tabulated({0.5, 1, 2}, {0.25, 1, 4});
  EXPECT_DOUBLE_EQ(pressure_eval(law, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(pressure_eval(law, 1.5), 2.5);
  PressureWarnings w;
  EXPECT_DOUBLE_EQ(pressure_eval(law, 0.1, &w), 0.25);
  EXPECT_EQ(w.clamped_below, 1);
  EXPECT_DOUBLE_EQ(pressure_derivative(law, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(pressure_derivative(law, 1.5), 3.0);
  EXPECT_THROW(pressure_eval(law, 2.5), DomainError);
}

// Oracle: the segment antiderivative of (p_k + s_k (x - r_k)) / x^2 in closed form.
TEST(Pressure, TabulatedPotentialMatchesClosedFormSegments) {
  std::vector<double> rho, p;
  for (int k = 0; k <= 35; ++k) {
    const double r = 0.5 + 0.1 * k;
    rho.push_back(r);
    p.push_back(r * r);
  }
  const auto law = PressureLaw::tabulated(rho, p);
  auto oracle = [&](double x) {
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < rho.size() && rho[k] < x; ++k) {
      const double a = rho[k];
      const double b = std::min(rho[k + 1], x);
      const double s = (p[k + 1] - p[k]) / (rho[k + 1] - rho[k]);
      const double c0 = p[k] - s * a;  // integrand = c0 / x^2 + s / x
      integral += c0 * (1.0 / a - 1.0 / b) + s * std::log(b / a);
    }
    return x * (integral + p.front() / rho.front());
  };
  for (double x : {0.55, 1.0, 2.37, 3.0, 3.99}) EXPECT_NEAR(pressure_potential(law, x), oracle(x), 1e-12 * oracle(x));
  // Piecewise-linear p = rho^2 reproduces the smooth gauge value to table accuracy.
  EXPECT_NEAR(pressure_potential(law, 3.0), 9.0, 0.05);
}

TEST(Pressure, MonotoneOnDenseScan) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> step(0.01, 1.0);
  std::vector<double> rho{0.1}, p{0.0};
  for (int k = 0; k < 12; ++k) {
    rho.push_back(rho.back() + step(rng));
    p.push_back(p.back() + step(rng));
  }
  const std::vector<PressureLaw> laws{PressureLaw::polytropic(1, 1.4), PressureLaw::polytropic(0.3, 3.0),
                                      PressureLaw::tabulated(rho, p)};
  for (const auto& law : laws) {
    double prev = -1.0;
    for (int k = 0; k <= 1000; ++k) {
      const double r = rho.back() * k / 1000.0;
      const double v = pressure_eval(law, r);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}
