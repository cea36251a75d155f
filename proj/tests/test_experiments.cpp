#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "azema/experiments/fragments.hpp"
#include "azema/experiments/parallel.hpp"
#include "azema/experiments/run.hpp"
#include "azema/experiments/scenario.hpp"

using namespace azema;

namespace {

SamplePath from_values(double h, std::vector<double> v) {
  const std::size_t n = v.size() - 1;
  return SamplePath{TimeGrid::make(h, n), std::move(v), "constructed"};
}

RandomTimeMark mark(std::size_t index, double h) {
  return RandomTimeMark{TimeKind::first_hit, index, static_cast<double>(index) * h, false, false};
}

ExperimentConfig config(ScenarioKind kind, std::size_t n, double h = 1e-3) {
  ExperimentConfig c;
  c.scenario.kind = kind;
  c.n_paths = n;
  c.step_h = h;
  c.master_seed = 77;
  c.keep_records = true;
  return c;
}

void expect_same_marks(const PathRecord& a, const PathRecord& b) {
  ASSERT_EQ(a.path_index, b.path_index);
  EXPECT_EQ(a.censored, b.censored);
  EXPECT_EQ(a.excluded, b.excluded);
  EXPECT_EQ(a.terminal, b.terminal);
  if (a.censored || a.excluded) return;
  EXPECT_EQ(a.L, b.L);
  EXPECT_EQ(a.rho, b.rho);
  EXPECT_EQ(a.x_rho, b.x_rho);
}

}  // namespace

TEST(Scenario, NamesRoundTrip) {
  for (auto k : kAllScenarios) EXPECT_EQ(scenario_kind_from_string(to_string(k)), k);
  EXPECT_THROW(scenario_kind_from_string("brownian"), std::invalid_argument);
}

TEST(Scenario, Validation) {
  Scenario s;
  s.kind = ScenarioKind::skew_weighted;
  s.alpha = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.kind = ScenarioKind::vanishing_martingale;
  s.x = 1.0;
  s.y = -2.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.kind = ScenarioKind::recurrent_diffusion;
  s.drift.family = "cubic";
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Scenario, EveryScenarioHasClaims) {
  for (const auto& [name, claims] : coverage_matrix()) {
    EXPECT_FALSE(claims.empty()) << name;
    for (const auto& c : claims) EXPECT_FALSE(c.reference.empty()) << c.test;
  }
}

TEST(ExperimentConfig, Validation) {
  auto c = config(ScenarioKind::abs_brownian, 100);
  EXPECT_NO_THROW(c.validate());
  c.n_paths = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.n_paths = 100;
  c.epsilon = 0.5 * std::sqrt(c.step_h);
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.epsilon.reset();
  c.step_h = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.step_h = 1e-3;
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.alpha = 0.01;
  c.uncensored_target = 101;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(100, 3,
                            [](std::size_t i) {
                              if (i == 37) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Fragments, SplitsAtMarks) {
  const double h = 0.1;
  const auto p = from_values(h, {0.0, 0.3, 0.5, 0.2, -0.1, 0.4, 0.8, 1.0});
  const auto frags = extract_fragments(p, mark(2, h), mark(4, h), mark(7, h), 0.5);
  ASSERT_EQ(frags.size(), 3u);
  EXPECT_EQ(frags[0].path.values, (std::vector<double>{0.0, 0.3, 0.5}));
  EXPECT_EQ(frags[1].path.values, (std::vector<double>{0.5, 0.2}));
  EXPECT_EQ(frags[2].path.values, (std::vector<double>{0.2, -0.1, 0.4, 0.8, 1.0}));
  EXPECT_NEAR(frags[0].duration, 0.2, 1e-12);
  EXPECT_NEAR(frags[1].duration, 0.2, 1e-12);
  EXPECT_NEAR(frags[2].duration, 0.3, 1e-12);
  EXPECT_EQ(frags[0].conditioning, 0.5);
  EXPECT_EQ(frags[1].start_value, 0.5);
  EXPECT_EQ(frags[2].path.grid.step, h);
}

TEST(Fragments, RhoEqualToLGivesEmptyMiddle) {
  const double h = 0.1;
  const auto p = from_values(h, {0.0, 0.2, 0.1, 0.6, 1.0});
  const auto frags = extract_fragments(p, mark(2, h), mark(2, h), mark(4, h), 0.1);
  EXPECT_TRUE(frags[1].empty());
  EXPECT_FALSE(frags[2].empty());
}

TEST(Fragments, RejectsBadMarks) {
  const double h = 0.1;
  const auto p = from_values(h, {0.0, 0.2, 0.1, 0.6, 1.0});
  EXPECT_THROW(extract_fragments(p, mark(3, h), mark(2, h), mark(4, h), 0.6), FragmentError);
  auto censored = mark(4, h);
  censored.censored = true;
  EXPECT_THROW(extract_fragments(p, mark(1, h), mark(2, h), censored, 0.2), FragmentError);
}

TEST(Fragments, WilliamsPostFragmentEndpoints) {
  auto c = config(ScenarioKind::williams_brownian, 200);
  const auto r = run_scenario(c);
  const double band = 2.0 * std::sqrt(c.step_h);
  std::size_t checked = 0;
  for (const auto& rec : r.records) {
    if (rec.censored || rec.excluded) continue;
    ASSERT_EQ(rec.fragments.size(), 1u);
    const auto& post = rec.fragments[0].path.values;
    ASSERT_GE(post.size(), 2u);
    EXPECT_LE(std::abs(post.front()), band) << rec.path_index;
    EXPECT_LE(std::abs(post.back() - 1.0), band) << rec.path_index;
    ++checked;
  }
  EXPECT_GT(checked, 150u);
}

TEST(Fragments, PreRhoMaxIsConditioningValue) {
  auto c = config(ScenarioKind::recurrent_diffusion, 200);
  const auto r = run_scenario(c);
  for (const auto& rec : r.records) {
    if (rec.censored || rec.excluded) continue;
    const auto& pre = rec.fragments[0];
    ASSERT_EQ(pre.origin, FragmentOrigin::pre_rho);
    EXPECT_EQ(*std::max_element(pre.path.values.begin(), pre.path.values.end()), *pre.conditioning);
  }
}

TEST(Reduction, SkewOneOneIsAbs) {
  auto abs = config(ScenarioKind::abs_brownian, 300);
  auto skew = abs;
  skew.scenario.kind = ScenarioKind::skew_weighted;
  skew.scenario.alpha = skew.scenario.beta = 1.0;
  const auto ra = run_scenario(abs);
  const auto rs = run_scenario(skew);
  ASSERT_EQ(ra.records.size(), rs.records.size());
  for (std::size_t i = 0; i < ra.records.size(); ++i) expect_same_marks(ra.records[i], rs.records[i]);
  ASSERT_EQ(ra.reports.size(), rs.reports.size());
  for (std::size_t i = 0; i < ra.reports.size(); ++i) {
    EXPECT_EQ(ra.reports[i].name, rs.reports[i].name);
    EXPECT_EQ(ra.reports[i].pass, rs.reports[i].pass) << ra.reports[i].name;
    EXPECT_EQ(ra.reports[i].skipped, rs.reports[i].skipped) << ra.reports[i].name;
    EXPECT_EQ(ra.reports[i].statistic, rs.reports[i].statistic) << ra.reports[i].name;
  }
}

TEST(Reduction, DriftlessRecurrentIsWilliams) {
  auto w = config(ScenarioKind::williams_brownian, 200);
  auto rec = w;
  rec.scenario.kind = ScenarioKind::recurrent_diffusion;
  rec.scenario.drift.family = "zero";
  const auto rw = run_scenario(w);
  const auto rr = run_scenario(rec);
  ASSERT_EQ(rw.records.size(), rr.records.size());
  for (std::size_t i = 0; i < rw.records.size(); ++i) expect_same_marks(rw.records[i], rr.records[i]);
}

TEST(Reduction, VanishingMatchesTransientMarks) {
  auto t = config(ScenarioKind::transient_bessel3, 100);
  t.horizon = 10.0;
  t.scenario.x = 2.0;
  t.scenario.y = 1.5;
  auto v = t;
  v.scenario.kind = ScenarioKind::vanishing_martingale;
  v.scenario.x = 0.5;  // M = 1/R
  v.scenario.y = 1.0 / 1.5;
  const auto rt = run_scenario(t);
  const auto rv = run_scenario(v);
  for (std::size_t i = 0; i < rt.records.size(); ++i) {
    const auto& a = rt.records[i];
    const auto& b = rv.records[i];
    EXPECT_EQ(a.censored, b.censored);
    if (a.censored) continue;
    EXPECT_EQ(a.L.index, b.L.index) << i;
    EXPECT_EQ(a.L.beyond_horizon, b.L.beyond_horizon) << i;
    // interpolation happens in R or in 1/R, so times agree to within a step
    if (std::isfinite(a.L.time)) EXPECT_NEAR(a.L.time, b.L.time, t.step_h) << i;
    EXPECT_NEAR(a.x_rho, b.x_rho, 1e-9) << i;
  }
}

TEST(RunScenario, Deterministic) {
  auto c = config(ScenarioKind::abs_brownian, 300);
  c.threads = 3;
  const auto a = run_scenario(c);
  c.threads = 1;
  const auto b = run_scenario(c);
  ASSERT_EQ(a.reports.size(), b.reports.size());
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    EXPECT_EQ(a.reports[i].statistic, b.reports[i].statistic);
    EXPECT_EQ(a.reports[i].p_value_or_bound, b.reports[i].p_value_or_bound);
    EXPECT_EQ(a.reports[i].notes, b.reports[i].notes);
  }
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i].value, b.samples[i].value);
}

TEST(RunScenario, WilliamsCensoringNearEightPercent) {
  auto c = config(ScenarioKind::williams_brownian, 5000);
  c.keep_records = false;
  const auto r = run_scenario(c);
  // P(T_1 > 100) = erf(1 / sqrt(200))
  EXPECT_NEAR(r.censoring_fraction, std::erf(1.0 / std::sqrt(200.0)), 0.01);
  EXPECT_NEAR(r.censoring_fraction, 0.08, 0.01);
}

TEST(RunScenario, AbortsOnHeavyCensoring) {
  auto c = config(ScenarioKind::williams_brownian, 100);
  c.horizon = 0.2;
  EXPECT_THROW(run_scenario(c), ExperimentAbort);
}

TEST(RunScenario, UnderstaffedStrataAreSkippedNotPassed) {
  const auto r = run_scenario(config(ScenarioKind::abs_brownian, 400));
  const auto* pre = r.find("pre_rho_reflected_bm");
  ASSERT_NE(pre, nullptr);
  EXPECT_TRUE(pre->skipped);
  EXPECT_FALSE(pre->pass);
  EXPECT_NE(pre->notes.find("insufficient samples"), std::string::npos);
  EXPECT_FALSE(r.all_passed());
}

TEST(RunScenario, TinyRunSkipsEveryClaim) {
  const auto r = run_scenario(config(ScenarioKind::abs_brownian, 10));
  EXPECT_EQ(r.reports.size(), scenario_claims(ScenarioKind::abs_brownian).size());
  for (const auto& rep : r.reports) {
    EXPECT_TRUE(rep.skipped) << rep.name;
    EXPECT_NE(rep.notes.find("insufficient samples"), std::string::npos);
  }
}

TEST(RunScenario, ReportsCarryClaimsAndSeed) {
  const auto r = run_scenario(config(ScenarioKind::recurrent_diffusion, 200));
  const auto claims = scenario_claims(ScenarioKind::recurrent_diffusion);
  EXPECT_EQ(r.reports.size(), claims.size());
  for (const auto& rep : r.reports) {
    EXPECT_FALSE(rep.claim.empty()) << rep.name;
    EXPECT_EQ(rep.seed, 77u);
  }
}

TEST(RunScenario, UncensoredTargetLimitsBattery) {
  auto c = config(ScenarioKind::abs_brownian, 300);
  c.uncensored_target = 250;
  const auto r = run_scenario(c);
  EXPECT_EQ(r.find("uniform_x_rho")->n_samples, 250u);
}

TEST(RunScenario, TransientSurvivalAgreesWithFormula) {
  auto c = config(ScenarioKind::transient_bessel3, 1000);
  c.keep_records = false;
  c.horizon = 6.0;
  const auto r = run_scenario(c);
  const auto* s = r.find("last_passage_survival");
  ASSERT_NE(s, nullptr);
  EXPECT_FALSE(s->skipped);
  // 1000 paths: sampling error of P(g > t) is about 0.016, so a looser bound
  EXPECT_LT(s->statistic, 0.05) << s->notes;
}
