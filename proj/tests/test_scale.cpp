#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "azema/scale/quadrature.hpp"
#include "azema/scale/scale_function.hpp"
#include "azema/core/paths.hpp"

using namespace azema;

TEST(AdaptiveSimpson, ElementaryIntegrals) {
  EXPECT_NEAR(integrate_or_throw([](double x) { return x * x; }, 0.0, 1.0), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(integrate_or_throw([](double x) { return std::sin(x); }, 0.0, M_PI), 2.0, 1e-10);
  EXPECT_NEAR(integrate_or_throw([](double x) { return std::exp(x); }, 1.0, 0.0), 1.0 - M_E, 1e-10);
  EXPECT_EQ(integrate_or_throw([](double x) { return x; }, 2.0, 2.0), 0.0);
}

TEST(AdaptiveSimpson, NonConvergenceReportsAchievedError) {
  QuadratureOptions opt;
  opt.max_depth = 4;
  opt.abs_tol = 1e-14;
  auto f = [](double x) { return 1.0 / std::sqrt(x); };
  const auto r = adaptive_simpson(f, 1e-12, 1.0, opt);
  EXPECT_FALSE(r.converged);
  try {
    integrate_or_throw(f, 1e-12, 1.0, opt);
    FAIL() << "expected QuadratureError";
  } catch (const QuadratureError& e) {
    EXPECT_GT(e.achieved_error(), 0.0);
  }
}

TEST(ScaleRecurrent, ZeroDriftIsIdentity) {
  for (double z : {-3.0, -0.5, 0.0, 0.25, 1.0, 7.0}) {
    EXPECT_NEAR(scale_recurrent(DriftSpec::zero(), z), z, 1e-10);
  }
  const auto s = ScaleFunction::recurrent(DriftSpec::zero());
  EXPECT_TRUE(s.is_identity());
  EXPECT_EQ(s(0.37), 0.37);
  EXPECT_EQ(s.inverse(-1.5), -1.5);
}

TEST(ScaleRecurrent, ConstantDriftClosedForm) {
  for (double beta : {-0.7, 0.3, 1.5}) {
    const auto drift = DriftSpec::constant(beta);
    const auto table = ScaleFunction::recurrent(drift);
    for (double z : {-2.0, -0.3, 0.4, 1.0, 3.0}) {
      const double expected = (1.0 - std::exp(-2.0 * beta * z)) / (2.0 * beta);
      EXPECT_NEAR(scale_recurrent(drift, z), expected, 1e-8 * std::max(1.0, std::abs(expected)));
      EXPECT_NEAR(table(z), expected, 1e-8 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(ScaleRecurrent, OrnsteinUhlenbeckMatchesBruteForceRiemannSum) {
  const std::size_t panels = 10000000;
  const double w = 1.0 / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t i = 0; i < panels; ++i) {
    const double y = (static_cast<double>(i) + 0.5) * w;
    sum += std::exp(y * y);
  }
  const double brute = sum * w;
  const auto ou = DriftSpec::mean_reverting(1.0);
  EXPECT_NEAR(scale_recurrent(ou, 1.0), brute, 1e-6);
  EXPECT_NEAR(ScaleFunction::recurrent(ou)(1.0), brute, 1e-6);
  EXPECT_NEAR(scale_recurrent(ou, 1.0), 1.4626517459071816, 1e-10);
}

TEST(ScaleFunctionTable, StrictlyIncreasingWithUnitSlopeAtZero) {
  const auto s = ScaleFunction::recurrent(DriftSpec::mean_reverting(1.0));
  EXPECT_EQ(s(0.0), 0.0);
  EXPECT_NEAR(s.derivative(0.0), 1.0, 1e-14);
  double prev = s(-5.0);
  for (double z = -5.0 + 0.01; z <= 5.0; z += 0.01) {
    const double cur = s(z);
    ASSERT_LT(prev, cur) << z;
    prev = cur;
  }
}

TEST(ScaleFunctionTable, AgreesWithDirectQuadrature) {
  const auto ou = DriftSpec::mean_reverting(1.0);
  const auto s = ScaleFunction::recurrent(ou);
  for (double z = -4.5; z <= 4.5; z += 0.173) {
    const double direct = scale_recurrent(ou, z);
    EXPECT_NEAR(s(z), direct, 1e-8 * std::max(1.0, std::abs(direct))) << z;
  }
}

TEST(ScaleFunctionTable, InverseRoundTrip) {
  const auto s = ScaleFunction::recurrent(DriftSpec::mean_reverting(1.0));
  for (double z = -4.5; z <= 4.5; z += 0.0371) EXPECT_NEAR(s.inverse(s(z)), z, 1e-8) << z;
  const auto t = ScaleFunction::transient_bessel3();
  for (double x = 0.05; x < 100.0; x *= 1.37) EXPECT_NEAR(t.inverse(t(x)), x, 1e-8 * x);
}

TEST(ScaleFunctionTable, AnnihilatedByGenerator) {
  // s''/2 + b s' = 0, checked by central differences of s'.
  const auto s = ScaleFunction::recurrent(DriftSpec::mean_reverting(1.0));
  const double d = 1e-4;
  for (double x = -2.0; x <= 2.0; x += 0.25) {
    const double s2 = (s.derivative(x + d) - s.derivative(x - d)) / (2.0 * d);
    EXPECT_NEAR(0.5 * s2 - x * s.derivative(x), 0.0, 1e-6 * s.derivative(x)) << x;
  }
}

TEST(ScaleFunctionTable, ScaledProcessIsDriftless) {
  // s(Y) is a martingale for the OU process started at 0: E s(Y_1) = 0.
  const auto s = ScaleFunction::recurrent(DriftSpec::mean_reverting(1.0));
  const auto grid = TimeGrid::make(1e-3, 1000);
  const std::size_t n = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = s(simulate_sde([](double y) { return -y; }, 0.0, grid, SeedSpec{3, i}).back());
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / static_cast<double>(n);
  const double se = std::sqrt((sum_sq / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
  EXPECT_NEAR(mean, 0.0, 4.0 * se);
}

TEST(ScaleTransient, ClosedFormValues) {
  EXPECT_EQ(scale_transient_bessel3(1.0), -1.0);
  EXPECT_NEAR(scale_transient_bessel3(1e6), -1e-6, 1e-20);
  EXPECT_EQ(std::min(scale_transient_bessel3(2.0) / scale_transient_bessel3(1.0), 1.0), 0.5);
  EXPECT_THROW(scale_transient_bessel3(0.0), std::invalid_argument);
  EXPECT_THROW(scale_transient_bessel3(-2.0), std::invalid_argument);
  const auto t = ScaleFunction::transient_bessel3();
  double prev = t(1e-3);
  for (double x = 2e-3; x < 1e4; x *= 1.5) {
    const double cur = t(x);
    ASSERT_LT(prev, cur);
    ASSERT_LT(cur, 0.0);
    prev = cur;
  }
}

TEST(ScaleTransient, AnnihilatedByBesselGenerator) {
  // s''/2 + s'/x = 0 for s = -1/x.
  for (double x : {0.2, 1.0, 3.0, 10.0}) {
    const double s1 = 1.0 / (x * x), s2 = -2.0 / (x * x * x);
    EXPECT_NEAR(0.5 * s2 + s1 / x, 0.0, 1e-15);
    EXPECT_EQ(ScaleFunction::transient_bessel3().derivative(x), s1);
  }
}
