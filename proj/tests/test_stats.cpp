#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "azema/core/paths.hpp"
#include "azema/core/rng.hpp"
#include "azema/stats/checks.hpp"
#include "azema/stats/kolmogorov.hpp"

using namespace azema;

namespace {

std::vector<double> uniforms(std::uint64_t seed, std::size_t n) {
  RandomStream s(SeedSpec{seed, 0});
  std::vector<double> u(n);
  for (auto& v : u) v = s.uniform();
  return u;
}

}  // namespace

TEST(Kolmogorov, SurvivalMatchesReferenceValues) {
  // reference values of the asymptotic Kolmogorov survival function
  const std::vector<std::pair<double, double>> ref{
      {0.3, 0.9999906941986655}, {0.5, 0.9639452436648751}, {1.0, 0.26999967167735456},
      {1.2, 0.11224966667072497}, {1.36, 0.049485876755377876}, {1.63, 0.009846364888486529},
      {2.5, 7.453306344157342e-06}};
  for (const auto& [l, q] : ref) EXPECT_NEAR(kolmogorov_survival(l), q, 1e-12) << l;
  EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(KsUniform, PerfectGrid) {
  const std::size_t n = 200;
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = (static_cast<double>(i) + 0.5) / n;
  const auto r = ks_uniform(u);
  EXPECT_NEAR(r.statistic, 0.5 / n, 1e-15);
  EXPECT_TRUE(r.pass);
}

TEST(KsUniform, DegenerateSampleFails) {
  const auto r = ks_uniform(std::vector<double>(100, 0.5));
  EXPECT_DOUBLE_EQ(r.statistic, 0.5);
  EXPECT_FALSE(r.pass);
}

TEST(KsUniform, RejectsBadInput) {
  EXPECT_THROW(ks_uniform(std::vector<double>(49, 0.5)), std::invalid_argument);
  auto u = uniforms(1, 100);
  u[3] = 1.5;
  EXPECT_THROW(ks_uniform(u), std::invalid_argument);
}

TEST(KsUniform, SelfCalibration) {
  int passes = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) passes += ks_uniform(uniforms(1000 + rep, 1000)).pass;
  EXPECT_GE(passes, 98);
}

TEST(KsTwoSample, IdenticalAndDisjoint) {
  const auto a = uniforms(2, 1000);
  const auto same = ks_two_sample(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_TRUE(same.pass);
  auto b = uniforms(3, 1000);
  for (auto& v : b) v += 0.5;
  EXPECT_FALSE(ks_two_sample(a, b).pass);
  EXPECT_THROW(ks_two_sample(a, std::vector<double>{}), std::invalid_argument);
}

TEST(KsTwoSample, SelfCalibration) {
  int passes = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    passes += ks_two_sample(uniforms(2000 + rep, 500), uniforms(5000 + rep, 700)).pass;
  }
  EXPECT_GE(passes, 98);
}

TEST(OptionalStopping, ConstantMartingale) {
  const auto r = optional_stopping_check(std::vector<double>(100, 0.7), 0.7);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.p_value_or_bound, 0.0);
}

TEST(OptionalStopping, DetectsShiftedMean) {
  auto u = uniforms(4, 10000);
  EXPECT_TRUE(optional_stopping_check(u, 0.5).pass);
  EXPECT_FALSE(optional_stopping_check(u, 0.55).pass);
}

TEST(OptionalStopping, SelfCalibration) {
  int passes = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    passes += optional_stopping_check(uniforms(300 + rep, 2000), 0.5).pass;
  }
  EXPECT_GE(passes, 98);
}

TEST(Compensator, TimeZeroIsTrivial) {
  // X increases to 1 at the end; rho at index 3
  const auto grid = TimeGrid::make(0.1, 5);
  AzemaProcess az{grid, {0.0, 0.2, 0.1, 0.6, 0.3, 1.0}, {}, "constructed"};
  for (double x : az.X) az.Z.push_back(1.0 - x);
  RandomTimeMark rho{TimeKind::pre_maximum_rho, 3, 0.3, false, false};
  const std::vector<double> t0{0.0};
  const auto terms = compensator_terms(az, rho, t0);
  ASSERT_FALSE(terms.excluded);
  EXPECT_EQ(terms.indicator[0], 0.0);
  EXPECT_EQ(terms.log_term[0], 0.0);
  const std::vector<double> late{0.45};
  const auto t2 = compensator_terms(az, rho, late);
  EXPECT_EQ(t2.indicator[0], 1.0);
  EXPECT_NEAR(t2.log_term[0], -std::log(0.4), 1e-15);
}

TEST(Compensator, ExcludesDivergentAndCensoredPaths) {
  const auto grid = TimeGrid::make(0.1, 3);
  AzemaProcess az{grid, {0.0, 1.0, 0.5, 1.0}, {1.0, 0.0, 0.5, 0.0}, "constructed"};
  RandomTimeMark rho{TimeKind::pre_maximum_rho, 2, 0.2, false, false};
  const std::vector<double> t{0.25};
  EXPECT_TRUE(compensator_terms(az, rho, t).excluded);
  rho.censored = true;
  EXPECT_EQ(compensator_terms(az, rho, t).diagnostic, "censored");
}

TEST(Compensator, SyntheticExponentialClock) {
  // Z_t = exp(-t) deterministic and rho = inf{t : -log Z_t >= E}, E ~ Exp(1):
  // then P(rho <= t) = E[-log Z_{t ^ rho}] exactly.
  const auto grid = TimeGrid::make(1e-3, 5000);
  std::vector<CompensatorTerms> terms;
  const std::vector<double> cps{0.25, 0.5, 1.0, 2.0};
  const auto u = uniforms(5, 10000);
  AzemaProcess az{grid, std::vector<double>(grid.size()), std::vector<double>(grid.size()), "exp"};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    az.Z[k] = std::exp(-grid.time(k));
    az.X[k] = 1.0 - az.Z[k];
  }
  for (double v : u) {
    const double e = -std::log(v);
    const std::size_t idx = std::min(grid.index_at_or_before(e), grid.n_steps);
    terms.push_back(compensator_terms(az, {TimeKind::pre_maximum_rho, idx, grid.time(idx), false, false}, cps));
  }
  EXPECT_TRUE(compensator_check(terms, cps).pass) << compensator_check(terms, cps).notes;
}

TEST(DriftRegression, DriftlessBrownianControl) {
  const auto grid = TimeGrid::make(1e-3, 1000);
  std::vector<SamplePath> frags;
  for (std::uint64_t i = 0; i < 200; ++i) frags.push_back(simulate_bm(grid, SeedSpec{6, i}));
  DriftOptions opt;
  opt.lo = -1.0;
  opt.hi = 1.0;
  const auto [prof, r] = drift_regression(frags, 10, [](double) { return 0.0; }, opt);
  EXPECT_TRUE(r.pass) << r.notes;
  EXPECT_EQ(prof.size(), prof.target_drift.size());
}

TEST(DriftRegression, ConstantDriftAndWrongTarget) {
  const auto grid = TimeGrid::make(1e-3, 1000);
  std::vector<SamplePath> frags;
  for (std::uint64_t i = 0; i < 200; ++i) {
    frags.push_back(simulate_sde([](double) { return 2.0; }, 0.0, grid, SeedSpec{7, i}));
  }
  EXPECT_TRUE(drift_regression(frags, 8, [](double) { return 2.0; }).second.pass);
  EXPECT_FALSE(drift_regression(frags, 8, [](double) { return -2.0; }).second.pass);
}

TEST(DriftRegression, InsufficientDataIsAnError) {
  const auto grid = TimeGrid::make(1e-3, 100);
  std::vector<SamplePath> frags{simulate_bm(grid, SeedSpec{8, 0})};
  EXPECT_THROW(drift_regression(frags, 5, [](double) { return 0.0; }), std::invalid_argument);
  DriftOptions opt;
  opt.min_total = 10;
  opt.min_count = 1000;
  EXPECT_THROW(drift_regression(frags, 5, [](double) { return 0.0; }, opt), std::invalid_argument);
}

TEST(Independence, FreshUniformsSelfCalibrate) {
  int passes = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    passes += independence_test(uniforms(700 + rep, 1000), uniforms(900 + rep, 1000), 5).pass;
  }
  EXPECT_GE(passes, 98);
}

TEST(Independence, IdenticalSamplesFail) {
  const auto u = uniforms(9, 1000);
  EXPECT_FALSE(independence_test(u, u, 5).pass);
}

TEST(Independence, RejectsBadInput) {
  const auto u = uniforms(10, 1000);
  EXPECT_THROW(independence_test(u, uniforms(11, 999), 5), std::invalid_argument);
  EXPECT_THROW(independence_test(uniforms(1, 100), uniforms(2, 100), 5), std::invalid_argument);
  EXPECT_THROW(independence_test(u, std::vector<double>(1000, 1.0), 5), std::invalid_argument);
}

TEST(Independence, SmallSampleMergesBins) {
  // 20 x 20 bins on 600 pairs would have expected counts 1.5
  const auto r = independence_test(uniforms(12, 600), uniforms(13, 600), 20);
  EXPECT_NE(r.notes.find("10x10"), std::string::npos) << r.notes;
}

TEST(LawTransform, IdentityAndReciprocal) {
  EXPECT_TRUE(law_transform_check(uniforms(14, 1000), [](double u) { return u; }, 2000, 1).pass);
  auto r = uniforms(15, 5000);
  for (auto& v : r) v = 1.0 / v;
  EXPECT_TRUE(law_transform_check(r, [](double u) { return 1.0 / u; }, 5000, 2).pass);
  EXPECT_FALSE(law_transform_check(r, [](double u) { return 2.0 / u; }, 5000, 2).pass);
}

TEST(LawTransform, NonFiniteTransformRejected) {
  EXPECT_THROW(law_transform_check(uniforms(16, 600), [](double) { return NAN; }, 100, 1),
               std::invalid_argument);
  EXPECT_THROW(law_transform_check(uniforms(16, 100), [](double u) { return u; }, 100, 1),
               std::invalid_argument);
}

TEST(Reports, DeterministicGivenInputs) {
  const auto u = uniforms(17, 1000);
  const auto a = law_transform_check(u, [](double x) { return x; }, 1000, 42);
  const auto b = law_transform_check(u, [](double x) { return x; }, 1000, 42);
  EXPECT_EQ(a.statistic, b.statistic);
  EXPECT_EQ(a.p_value_or_bound, b.p_value_or_bound);
  EXPECT_EQ(a.seed, 42u);
}
