// Running a scenario end to end: simulate paths, locate the random times,
// cut fragments and evaluate the scenario's test battery.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "azema/core/paths.hpp"
#include "azema/core/rng.hpp"
#include "azema/experiments/fragments.hpp"
#include "azema/experiments/oracles.hpp"
#include "azema/experiments/parallel.hpp"
#include "azema/experiments/scenario.hpp"
#include "azema/scale/local_time.hpp"
#include "azema/scale/scale_function.hpp"
#include "azema/scale/sigma.hpp"
#include "azema/stats/checks.hpp"
#include "azema/stats/kolmogorov.hpp"
#include "azema/stats/report.hpp"
#include "azema/times/azema.hpp"
#include "azema/times/random_times.hpp"

namespace azema {

struct ExperimentConfig {
  Scenario scenario;
  std::size_t n_paths = 1000;
  double step_h = 1e-3;
  std::optional<double> horizon;    // scenario default when empty
  std::uint64_t master_seed = 1;
  double alpha = kDefaultAlpha;
  double rel_tol = 0.15;
  std::optional<double> zero_band;  // 2 sqrt(h) when empty
  std::optional<double> epsilon;    // sqrt(h) when empty
  std::size_t threads = 0;          // 0 = all hardware threads
  bool keep_records = false;        // keep per-path records (with fragments) in the result
  /// Evaluate the battery on the first this-many uncensored paths only.
  std::optional<std::size_t> uncensored_target;

  bool operator==(const ExperimentConfig&) const = default;

  double resolved_horizon() const { return horizon.value_or(scenario.default_horizon()); }
  double resolved_zero_band() const { return zero_band.value_or(2.0 * std::sqrt(step_h)); }
  double resolved_epsilon() const { return epsilon.value_or(std::sqrt(step_h)); }

  void validate() const {
    scenario.validate();
    auto positive = [](double v, const char* field) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(field) + " must be finite and > 0");
      }
    };
    if (n_paths == 0) throw std::invalid_argument("n_paths must be >= 1");
    positive(step_h, "step_h");
    positive(resolved_horizon(), "horizon");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    positive(rel_tol, "rel_tol");
    positive(resolved_zero_band(), "zero_band");
    positive(resolved_epsilon(), "epsilon");
    if (resolved_epsilon() < std::sqrt(step_h) * (1.0 - 1e-12)) {
      throw std::invalid_argument("epsilon must be at least sqrt(step_h)");
    }
    if (resolved_horizon() < step_h) throw std::invalid_argument("horizon must be >= step_h");
    if (uncensored_target && (*uncensored_target == 0 || *uncensored_target > n_paths)) {
      throw std::invalid_argument("uncensored_target must lie in [1, n_paths]");
    }
  }
};

/// Raised when a run cannot produce meaningful results (too much censoring,
/// numerical pathology).
class ExperimentAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-path outcome. NaN marks "not available for this scenario".
struct PathRecord {
  std::uint64_t path_index = 0;
  bool censored = false;
  bool excluded = false;
  std::string diagnostic;
  RandomTimeMark terminal, L, rho;
  double x_rho = NAN;
  double state_rho = NAN;
  double rho_clock = NAN;       // pre-rho duration on the bracket clock
  double post_duration = NAN;   // terminal - L on the bracket clock
  double post_rate = 1.0;       // bracket clock rate after L
  double m_linear_rho = NAN;    // (B + 1)/2 at rho
  double m_exp_rho = NAN;       // exp(B - t/2) at rho
  double m_exp_L = NAN;         // exp(B - t/2) at L
  CompensatorTerms compensator;
  bool has_sigma = false;
  bool sigma_pass = false;
  double off_band_mass = 0.0;
  double total_mass = 0.0;
  double max_decrease = 0.0;
  double skorokhod_c = NAN;     // Skorokhod defect / (vol sqrt(h)), vol the largest volatility of X
  double flat_increase = NAN;   // increase of A after L
  double lt_occupation = NAN;   // terminal local time of the state at 0
  double lt_tanaka = NAN;
  std::vector<double> passed_after;  // 1{L > t} at the survival checkpoints
  std::vector<double> z_at;          // Z_t at the survival checkpoints
  double state_after_L = NAN;        // state one time unit after L
  std::vector<Fragment> fragments;
};

struct SampleRow {
  std::uint64_t path_index = 0;
  std::string quantity;
  double value = 0.0;
};

struct DriftTable {
  std::string name;
  DriftProfile profile;
};

struct QQTable {
  std::string name;
  std::vector<std::pair<double, double>> pairs;  // (sample quantile, oracle quantile)
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TestReport> reports;
  std::vector<SampleRow> samples;
  std::vector<double> x_rho_sorted;
  std::vector<DriftTable> drift_profiles;
  std::vector<QQTable> qq_tables;
  std::size_t n_paths = 0;
  std::size_t n_censored = 0;
  std::size_t n_excluded = 0;
  double censoring_fraction = 0.0;
  double wall_time_seconds = 0.0;
  std::vector<std::string> diagnostics;
  std::vector<PathRecord> records;  // only with keep_records

  bool all_passed() const {
    return std::all_of(reports.begin(), reports.end(),
                       [](const TestReport& r) { return r.pass && !r.skipped; });
  }
  const TestReport* find(const std::string& name) const {
    for (const auto& r : reports) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }
};

inline constexpr double kSurvivalCheckpoints[] = {1.0, 2.0, 5.0};
inline constexpr double kCompensatorCheckpoints[] = {0.25, 0.5, 1.0, 2.0};
inline constexpr std::size_t kStrata = 10;
inline constexpr std::size_t kMinStratum = 500;
inline constexpr std::size_t kMinPairs = 500;
/// Below this many paths the battery is not run; every claim is reported skipped.
inline constexpr std::size_t kMinPaths = 100;

namespace detail {

struct RunContext {
  const ExperimentConfig& cfg;
  TimeGrid grid;
  AzemaRule rule;
  std::optional<ScaleFunction> scale;
  DriftSpec drift;
  double zero_band;
  double epsilon;
};

inline SamplePath as_path(const TimeGrid& grid, std::vector<double> v, const char* label) {
  return SamplePath{grid, std::move(v), label};
}

inline void fill_sigma(PathRecord& rec, const SamplePath& x, const SamplePath& driving,
                       const std::vector<double>& integrand, double vol, const RunContext& ctx) {
  const auto dec = sigma_decompose(x, driving, integrand);
  const auto report = check_sigma_class(dec, ctx.zero_band);
  double total = 0.0;
  const double frac = off_band_fraction(dec, ctx.zero_band, &total);
  rec.has_sigma = true;
  rec.sigma_pass = report.pass;
  rec.total_mass = total;
  rec.off_band_mass = frac * total;
  rec.max_decrease = dec.max_decrease;
  rec.skorokhod_c = dec.skorokhod_defect() / (vol * std::sqrt(ctx.grid.step));
  const std::size_t t_idx = std::min(rec.terminal.index, dec.A.size() - 1);
  std::size_t from = std::min(rec.L.index, t_idx);
  // a step leaving a grid zero still straddles L
  if (std::abs(driving.values[from]) < kZeroTolerance && from < t_idx) ++from;
  rec.flat_increase = dec.A[t_idx] - dec.A[from];
}

inline void simulate_brownian(PathRecord& rec, const RunContext& ctx) {
  const auto& sc = ctx.cfg.scenario;
  const bool williams = sc.kind == ScenarioKind::williams_brownian;
  const double a = williams ? 1.0 : ctx.rule.alpha;
  const double b = williams ? 0.0 : ctx.rule.beta;
  const double up = 1.0 / a;
  const double down = williams ? -HUGE_VAL : -1.0 / b;
  const SeedSpec seed{ctx.cfg.master_seed, rec.path_index};
  auto B = simulate_bm(ctx.grid, seed, [=](double v) { return v >= up || v <= down; });
  std::vector<double> raw(B.size());
  for (std::size_t k = 0; k < B.size(); ++k) {
    raw[k] = a * std::max(B[k], 0.0) + b * std::max(-B[k], 0.0);
  }
  rec.terminal = first_hitting(as_path(B.grid, raw, "X"), 1.0);
  rec.censored = rec.terminal.censored;
  if (rec.censored) return;
  // the stopped path sits exactly on the barrier at the terminal index
  const std::size_t K = rec.terminal.index;
  B.values[K] = B.values[K] > 0.0 ? up : down;
  rec.L = last_zero_before(B, rec.terminal);
  const auto az = azema_process(B, ctx.rule, rec.terminal);
  // B+ is flat at 0 below the axis; there the maximum of B decides
  rec.rho = williams ? pre_maximum_rho(az, rec.L, B.values) : pre_maximum_rho(az, rec.L);
  rec.x_rho = az.X[rec.rho.index];
  rec.state_rho = B[rec.rho.index];

  std::vector<double> rate(B.size()), integrand(B.size());
  for (std::size_t k = 0; k < B.size(); ++k) {
    const bool pos = B[k] > 0.0;
    rate[k] = pos ? a * a : b * b;
    integrand[k] = pos ? a : -b;
  }
  const auto clock = accumulate_bracket(rate, B.grid);
  rec.rho_clock = clock.values[rec.rho.index];
  // after L the sign of B is fixed, so the clock runs at a constant rate
  const double post_rate = B.values[K] > 0.0 ? a * a : b * b;
  rec.post_duration = post_rate * (rec.terminal.time - rec.L.time);
  rec.post_rate = post_rate;

  auto bm_at = [&](const RandomTimeMark& m) { return B.at_time(m.time); };
  rec.m_linear_rho = 0.5 * (B[rec.rho.index] + 1.0);
  rec.m_exp_rho = std::exp(B[rec.rho.index] - 0.5 * rec.rho.time);
  rec.m_exp_L = std::exp(bm_at(rec.L) - 0.5 * rec.L.time);
  if (!williams) {
    rec.compensator = compensator_terms(az, rec.rho, kCompensatorCheckpoints);
  }
  const auto X = as_path(B.grid, az.X, "X");
  fill_sigma(rec, X, B, integrand, williams ? 1.0 : std::max(a, b), ctx);
  rec.lt_tanaka = local_time(B, 0.0, LocalTimeMethod::tanaka_residual, 0.0).terminal();
  rec.lt_occupation = local_time(B, 0.0, LocalTimeMethod::occupation, ctx.epsilon).terminal();

  auto frags = extract_fragments(X, rec.rho, rec.L, rec.terminal, rec.x_rho);
  // the post-L fragment, run on the bracket clock
  Fragment post = std::move(frags[2]);
  post.path.grid.step *= post_rate;
  rec.fragments.push_back(std::move(post));
}

inline void simulate_recurrent(PathRecord& rec, const RunContext& ctx) {
  const SeedSpec seed{ctx.cfg.master_seed, rec.path_index};
  auto Y = simulate_sde_driven(ctx.drift, 0.0, ctx.grid, seed, NoiseMode::stochastic,
                               [](double v) { return v >= 1.0; })
               .path;
  rec.terminal = first_hitting(Y, 1.0);
  rec.censored = rec.terminal.censored;
  if (rec.censored) return;
  Y.values[rec.terminal.index] = 1.0;
  rec.L = last_zero_before(Y, rec.terminal);
  const auto az = azema_process(Y, ctx.rule, rec.terminal, &*ctx.scale);
  rec.rho = pre_maximum_rho(az, rec.L, Y.values);
  rec.x_rho = az.X[rec.rho.index];
  rec.state_rho = Y[rec.rho.index];
  rec.post_duration = rec.terminal.time - rec.L.time;
  rec.fragments = extract_fragments(Y, rec.rho, rec.L, rec.terminal, rec.state_rho);
}

inline void simulate_transient(PathRecord& rec, const RunContext& ctx) {
  const auto& sc = ctx.cfg.scenario;
  const bool vanishing = sc.kind == ScenarioKind::vanishing_martingale;
  const double r0 = vanishing ? 1.0 / sc.x : sc.x;
  const double r_level = vanishing ? 1.0 / sc.y : sc.y;
  const SeedSpec seed{ctx.cfg.master_seed, rec.path_index};
  const auto bes = simulate_bessel3_driven(r0, ctx.grid, seed);
  const auto& R = bes.radius;
  SamplePath state = R;
  double level = sc.y;
  if (vanishing) {
    for (auto& v : state.values) v = 1.0 / v;
    state.label = "M";
  }
  const auto esc = resolve_bessel3_escape(bes.terminal, ctx.grid.horizon(), r_level, seed);
  if (!esc.resolved) {
    rec.censored = true;
    rec.diagnostic = "escape not resolved";
    return;
  }
  rec.terminal = RandomTimeMark{TimeKind::last_passage, R.size() - 1, R.grid.horizon(), false, true};
  if (esc.returned) {
    rec.L = RandomTimeMark{TimeKind::last_passage, R.size() - 1, esc.last_return_time, false, true};
  } else {
    rec.L = last_passage(state, level, 0.0);
    if (rec.L.censored) {
      const double mn = *std::min_element(R.values.begin(), R.values.end());
      if (mn > r_level) {
        rec.L = RandomTimeMark{TimeKind::last_passage, 0, 0.0, false, false};  // never at the level
      } else {
        rec.censored = true;
        rec.diagnostic = "no passage located";
        return;
      }
    }
  }
  const auto az = vanishing ? azema_process(state, ctx.rule)
                            : azema_process(state, ctx.rule, std::nullopt, &*ctx.scale);
  rec.rho = pre_maximum_rho(az, rec.L, R.values);  // larger R wins where X is flat at 0
  // the running maximum of R may be beaten after the horizon
  double r_rho = R[rec.rho.index];
  if (esc.returned && esc.max_before_return > r_rho) {
    r_rho = esc.max_before_return;
    rec.rho.beyond_horizon = true;
    rec.rho.time = NAN;
  }
  rec.state_rho = vanishing ? 1.0 / r_rho : r_rho;
  rec.x_rho = rec.rho.beyond_horizon
                  ? (vanishing ? 1.0 - std::min(rec.state_rho / sc.y, 1.0)
                               : 1.0 - std::min(sc.y / r_rho, 1.0))
                  : az.X[rec.rho.index];
  for (double t : kSurvivalCheckpoints) {
    if (t > ctx.grid.horizon()) continue;
    rec.passed_after.push_back(rec.L.time > t ? 1.0 : 0.0);
    rec.z_at.push_back(az.Z[ctx.grid.index_at_or_before(t)]);
  }
  if (!rec.L.beyond_horizon && rec.L.time + 1.0 <= ctx.grid.horizon()) {
    rec.state_after_L = state.at_time(rec.L.time + 1.0);
  }
  if (!vanishing && !rec.L.beyond_horizon) {
    auto frags = extract_fragments(state, rec.rho, rec.L, rec.terminal, rec.state_rho);
    rec.fragments.push_back(std::move(frags[2]));
  }
}

inline PathRecord simulate_record(std::uint64_t index, const RunContext& ctx) {
  PathRecord rec;
  rec.path_index = index;
  try {
    switch (ctx.cfg.scenario.kind) {
      case ScenarioKind::williams_brownian:
      case ScenarioKind::abs_brownian:
      case ScenarioKind::skew_weighted: simulate_brownian(rec, ctx); break;
      case ScenarioKind::recurrent_diffusion: simulate_recurrent(rec, ctx); break;
      case ScenarioKind::transient_bessel3:
      case ScenarioKind::vanishing_martingale: simulate_transient(rec, ctx); break;
    }
  } catch (const FragmentError& e) {
    rec.excluded = true;
    rec.diagnostic = e.what();
    rec.fragments.clear();
  } catch (const ScenarioContractError& e) {
    rec.excluded = true;
    rec.diagnostic = e.what();
    rec.fragments.clear();
  }
  return rec;
}

// ---------------------------------------------------------------- batteries

struct Battery {
  const RunContext& ctx;
  std::vector<const PathRecord*> good;  // uncensored, not excluded
  ExperimentResult& result;

  std::uint64_t seed() const { return ctx.cfg.master_seed; }
  double alpha() const { return ctx.cfg.alpha; }

  template <class F>
  std::vector<double> collect(F&& f) const {
    std::vector<double> v;
    v.reserve(good.size());
    for (const auto* r : good) {
      const double x = f(*r);
      if (std::isfinite(x)) v.push_back(x);
    }
    return v;
  }

  void add(TestReport r, const std::string& claim) {
    r.seed = seed();
    if (r.claim.empty() || r.claim != claim) r.claim = claim;
    result.reports.push_back(std::move(r));
  }

  std::string claim_of(const std::string& test) const {
    for (const auto& c : scenario_claims(ctx.cfg.scenario.kind)) {
      if (c.test == test) return c.reference;
    }
    return {};
  }

  static TestReport insufficient(const std::string& name, std::size_t have, std::size_t need) {
    std::ostringstream os;
    os << "insufficient samples: " << have << " available, " << need << " required";
    return TestReport::skip(name, "", os.str(), have);
  }

  void uniform_x_rho() {
    const std::string name = "uniform_x_rho";
    const auto u = collect([](const PathRecord& r) { return r.x_rho; });
    result.x_rho_sorted = u;
    std::sort(result.x_rho_sorted.begin(), result.x_rho_sorted.end());
    if (u.size() < kMinKsSamples) return add(insufficient(name, u.size(), kMinKsSamples), claim_of(name));
    auto r = ks_uniform(u, alpha());
    r.name = name;
    add(std::move(r), claim_of(name));
  }

  void optional_stopping(const std::string& name, double PathRecord::*field, double m0) {
    const auto v = collect([&](const PathRecord& r) { return r.*field; });
    if (v.size() < 100) return add(insufficient(name, v.size(), 100), claim_of(name));
    auto r = optional_stopping_check(v, m0);
    r.name = name;
    add(std::move(r), claim_of(name));
  }

  void negative_control() {
    const std::string name = "negative_control_honest_time";
    const auto v = collect([](const PathRecord& r) { return r.m_exp_L; });
    if (v.size() < 100) return add(insufficient(name, v.size(), 100), claim_of(name));
    const auto inner = optional_stopping_check(v, 1.0);
    TestReport r = inner;
    r.name = name;
    r.pass = !inner.pass;
    r.notes = "exp martingale at L; the optional-stopping check must reject: " + inner.notes;
    add(std::move(r), claim_of(name));
  }

  void compensator() {
    const std::string name = "compensator_identity";
    std::vector<CompensatorTerms> terms;
    for (const auto* r : good) terms.push_back(r->compensator);
    if (terms.size() < 100) return add(insufficient(name, terms.size(), 100), claim_of(name));
    auto r = compensator_check(terms, kCompensatorCheckpoints);
    add(std::move(r), claim_of(name));
  }

  /// Indices of `good` split into kStrata equal-count strata by `key`.
  template <class F>
  std::vector<std::vector<const PathRecord*>> strata(F&& key) const {
    std::vector<const PathRecord*> sorted;
    for (const auto* r : good) {
      if (std::isfinite(key(*r))) sorted.push_back(r);
    }
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](auto* x, auto* y) { return key(*x) < key(*y); });
    std::vector<std::vector<const PathRecord*>> out(kStrata);
    for (std::size_t i = 0; i < sorted.size(); ++i) out[i * kStrata / sorted.size()].push_back(sorted[i]);
    return out;
  }

  void pre_rho_reflected_bm() {
    const std::string name = "pre_rho_reflected_bm";
    const auto groups = strata([](const PathRecord& r) { return r.x_rho; });
    const std::uint64_t oracle_seed = derive_seed(seed(), "oracle_reflected_bm");
    const auto oracle_grid = TimeGrid::from_horizon(ctx.grid.step, 50.0);
    std::size_t evaluated = 0, passed = 0;
    double worst_p = 1.0;
    std::ostringstream notes;
    std::vector<double> all_sample, all_oracle;
    for (std::size_t s = 0; s < groups.size(); ++s) {
      const auto& g = groups[s];
      if (g.size() < kMinStratum) {
        notes << "stratum " << s << " skipped (" << g.size() << " paths); ";
        continue;
      }
      std::vector<double> sample, oracle;
      for (const auto* r : g) {
        sample.push_back(r->rho_clock);
        const double t = abs_bm_first_grid_hit(r->x_rho, oracle_grid, SeedSpec{oracle_seed, r->path_index});
        if (std::isfinite(t)) oracle.push_back(t);
      }
      const auto ks = ks_two_sample(sample, oracle, alpha());
      ++evaluated;
      passed += ks.pass;
      worst_p = std::min(worst_p, ks.p_value_or_bound);
      notes << "stratum " << s << " [" << g.front()->x_rho << ", " << g.back()->x_rho
            << "] p=" << ks.p_value_or_bound << "; ";
      all_sample.insert(all_sample.end(), sample.begin(), sample.end());
      all_oracle.insert(all_oracle.end(), oracle.begin(), oracle.end());
    }
    if (evaluated < 8) {
      auto r = insufficient(name, good.size(), kStrata * kMinStratum);
      r.notes += "; " + notes.str();
      return add(std::move(r), claim_of(name));
    }
    TestReport r;
    r.name = name;
    r.n_samples = good.size();
    r.statistic = static_cast<double>(passed);
    r.p_value_or_bound = worst_p;
    r.tolerance_used = alpha();
    r.pass = passed >= 8;
    r.notes = std::to_string(passed) + "/" + std::to_string(evaluated) +
              " strata pass (need 8); " + notes.str();
    add(std::move(r), claim_of(name));
    result.qq_tables.push_back({"pre_rho_duration", qq_pairs(all_sample, all_oracle)});
  }

  void post_bessel_durations() {
    const std::string name = "post_L_bessel3_durations";
    const auto d = collect([](const PathRecord& r) { return r.post_duration; });
    if (d.size() < kMinKsSamples) return add(insufficient(name, d.size(), kMinKsSamples), claim_of(name));
    const std::uint64_t oracle_seed = derive_seed(seed(), "oracle_bessel3");
    const bool unit_rate = std::all_of(good.begin(), good.end(),
                                       [](const PathRecord* r) { return r->post_rate == 1.0; });
    std::vector<double> oracle;
    if (unit_rate) {
      oracle = bessel3_first_hit_sample(1.0, d.size(), TimeGrid::from_horizon(ctx.grid.step, 50.0),
                                        oracle_seed);
    } else {
      // one oracle path per sample path, on the clock grid that path runs on
      for (const auto* r : good) {
        if (!std::isfinite(r->post_duration)) continue;
        const double t = bessel3_first_hit(
            1.0, TimeGrid::from_horizon(r->post_rate * ctx.grid.step, 50.0),
            SeedSpec{oracle_seed, r->path_index});
        if (std::isfinite(t)) oracle.push_back(t);
      }
    }
    auto r = ks_two_sample(d, oracle, alpha());
    r.name = name;
    r.notes = "oracle: BES(3) from 0, first passage at 1, " + std::to_string(oracle.size()) + " paths";
    add(std::move(r), claim_of(name));
    result.qq_tables.push_back({"post_L_duration", qq_pairs(d, oracle)});
  }

  void drift(const std::string& name, const std::string& table, FragmentOrigin origin,
             std::function<double(double)> target, double lo, double hi, std::size_t bins,
             const std::vector<const PathRecord*>* subset = nullptr, bool record = true) {
    const auto& src = subset ? *subset : good;
    std::vector<SamplePath> frags;
    for (const auto* r : src) {
      for (const auto& f : r->fragments) {
        if (f.origin == origin && !f.empty()) frags.push_back(f.path);
      }
    }
    DriftOptions opt;
    opt.lo = lo;
    opt.hi = hi;
    opt.rel_tol = ctx.cfg.rel_tol;
    try {
      auto [prof, r] = drift_regression(frags, bins, target, opt);
      r.name = name;
      r.n_samples = frags.size();
      if (record) result.drift_profiles.push_back({table, prof});
      add(std::move(r), claim_of(name));
    } catch (const std::invalid_argument& e) {
      add(TestReport::skip(name, "", std::string("insufficient samples: ") + e.what(), frags.size()),
          claim_of(name));
    }
  }

  void independence(const std::string& name, double PathRecord::*a, double PathRecord::*b) {
    std::vector<double> u, v;
    for (const auto* r : good) {
      if (std::isfinite(r->*a) && std::isfinite(r->*b)) {
        u.push_back(r->*a);
        v.push_back(r->*b);
      }
    }
    if (u.size() < kMinPairs) return add(insufficient(name, u.size(), kMinPairs), claim_of(name));
    auto r = independence_test(u, v, 5, alpha());
    r.name = name;
    add(std::move(r), claim_of(name));
  }

  void sigma_class() {
    const std::string name = "sigma_class";
    std::size_t n = 0, pass = 0;
    double off = 0.0, total = 0.0, worst_drop = 0.0;
    for (const auto* r : good) {
      if (!r->has_sigma) continue;
      ++n;
      pass += r->sigma_pass;
      off += r->off_band_mass;
      total += r->total_mass;
      worst_drop = std::max(worst_drop, r->max_decrease);
    }
    if (n == 0) return add(insufficient(name, 0, 1), claim_of(name));
    TestReport r;
    r.name = name;
    r.n_samples = n;
    r.statistic = total > 0.0 ? off / total : 0.0;
    r.p_value_or_bound = 0.01;
    r.tolerance_used = ctx.zero_band;
    const double pass_rate = static_cast<double>(pass) / static_cast<double>(n);
    r.pass = r.statistic <= 0.01 && pass_rate >= 0.99;
    std::ostringstream os;
    os << "pooled off-band A-increase " << r.statistic << " (band " << ctx.zero_band << "); "
       << pass << "/" << n << " paths pass; largest raw A decrease " << worst_drop;
    r.notes = os.str();
    add(std::move(r), claim_of(name));
  }

  void flatness() {
    const std::string name = "flatness_after_L";
    const auto inc = collect([](const PathRecord& r) { return r.flat_increase; });
    if (inc.empty()) return add(insufficient(name, 0, 1), claim_of(name));
    const auto flat = static_cast<std::size_t>(std::count_if(
        inc.begin(), inc.end(), [&](double v) { return v <= ctx.zero_band; }));
    TestReport r;
    r.name = name;
    r.n_samples = inc.size();
    r.statistic = static_cast<double>(flat) / static_cast<double>(inc.size());
    r.p_value_or_bound = 0.99;
    r.tolerance_used = ctx.zero_band;
    r.pass = r.statistic >= 0.99;
    r.notes = std::to_string(flat) + "/" + std::to_string(inc.size()) +
              " paths with A-increase after L within the resolution";
    add(std::move(r), claim_of(name));
  }

  void skorokhod() {
    const std::string name = "skorokhod_identity";
    auto c = collect([](const PathRecord& r) { return r.skorokhod_c; });
    if (c.empty()) return add(insufficient(name, 0, 1), claim_of(name));
    std::sort(c.begin(), c.end());
    const double median = c[c.size() / 2];
    TestReport r;
    r.name = name;
    r.n_samples = c.size();
    r.statistic = median;
    r.p_value_or_bound = 2.0;
    r.tolerance_used = 2.0;
    r.pass = median <= 2.0;
    std::ostringstream os;
    os << "defect = C sqrt(h); median C " << median << ", 90% quantile "
       << c[static_cast<std::size_t>(0.9 * static_cast<double>(c.size() - 1))] << ", max "
       << c.back();
    r.notes = os.str();
    add(std::move(r), claim_of(name));
  }

  void law_transform(const std::function<double(double)>& transform) {
    const std::string name = "law_transform_state_rho";
    const auto v = collect([](const PathRecord& r) { return r.state_rho; });
    if (v.size() < 500) return add(insufficient(name, v.size(), 500), claim_of(name));
    auto r = law_transform_check(v, transform, v.size(), seed(), alpha());
    r.name = name;
    add(std::move(r), claim_of(name));
  }

  void last_passage_survival() {
    const std::string name = "last_passage_survival";
    std::vector<double> ts;
    for (double t : kSurvivalCheckpoints) {
      if (t <= ctx.grid.horizon()) ts.push_back(t);
    }
    if (good.size() < 100 || ts.empty()) return add(insufficient(name, good.size(), 100), claim_of(name));
    TestReport r;
    r.name = name;
    r.n_samples = good.size();
    r.tolerance_used = 0.02;
    r.p_value_or_bound = 0.02;
    std::ostringstream os;
    double worst = 0.0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      double p = 0.0, z = 0.0;
      for (const auto* rec : good) {
        p += rec->passed_after[j];
        z += rec->z_at[j];
      }
      p /= static_cast<double>(good.size());
      z /= static_cast<double>(good.size());
      worst = std::max(worst, std::abs(p - z));
      os << "t=" << ts[j] << ": P(L > t) " << p << " vs E Z_t " << z << "; ";
    }
    r.statistic = worst;
    r.pass = worst <= 0.02;
    r.notes = os.str();
    add(std::move(r), claim_of(name));
  }

  static std::vector<std::pair<double, double>> qq_pairs(std::vector<double> a, std::vector<double> b) {
    std::vector<std::pair<double, double>> out;
    if (a.empty() || b.empty()) return out;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t k = std::min<std::size_t>({a.size(), b.size(), 200});
    auto q = [](const std::vector<double>& v, double p) {
      const double pos = p * static_cast<double>(v.size() - 1);
      const auto i = static_cast<std::size_t>(pos);
      const double w = pos - static_cast<double>(i);
      return i + 1 < v.size() ? v[i] * (1.0 - w) + v[i + 1] * w : v.back();
    };
    for (std::size_t i = 0; i < k; ++i) {
      const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
      out.emplace_back(q(a, p), q(b, p));
    }
    return out;
  }
};

inline void stratified_drift(Battery& bat, const std::string& name, FragmentOrigin origin,
                             const std::function<std::function<double(double)>(double)>& target_for);

inline void run_battery(Battery& bat) {
  const auto& sc = bat.ctx.cfg.scenario;
  const auto inv_x = [](double x) { return 1.0 / x; };
  switch (sc.kind) {
    case ScenarioKind::williams_brownian:
      bat.uniform_x_rho();
      bat.post_bessel_durations();
      bat.drift("post_L_drift", "post_L_drift", FragmentOrigin::post_L, inv_x, 0.1, 0.9, 16);
      bat.independence("independence_x_rho_post_L", &PathRecord::x_rho, &PathRecord::post_duration);
      bat.sigma_class();
      bat.flatness();
      bat.skorokhod();
      break;
    case ScenarioKind::abs_brownian:
    case ScenarioKind::skew_weighted:
      bat.uniform_x_rho();
      bat.optional_stopping("optional_stopping_linear", &PathRecord::m_linear_rho, 0.5);
      bat.optional_stopping("optional_stopping_exp", &PathRecord::m_exp_rho, 1.0);
      bat.negative_control();
      bat.compensator();
      bat.pre_rho_reflected_bm();
      bat.post_bessel_durations();
      bat.drift("post_L_drift", "post_L_drift", FragmentOrigin::post_L, inv_x, 0.1, 0.9, 16);
      bat.independence("independence_x_rho_post_L", &PathRecord::x_rho, &PathRecord::post_duration);
      bat.sigma_class();
      bat.flatness();
      bat.skorokhod();
      break;
    case ScenarioKind::recurrent_diffusion: {
      const auto& s = *bat.ctx.scale;
      const auto& b = bat.ctx.drift;
      const double s1 = s(1.0);
      bat.uniform_x_rho();
      bat.law_transform([&](double u) { return s.inverse(s1 * u); });
      bat.drift("post_L_drift", "post_L_drift", FragmentOrigin::post_L,
                [&](double x) { return b(x) + s.derivative(x) / s(x); }, 0.1, 0.9, 16);
      // the target jumps at 0, which stays on a bin edge
      stratified_drift(bat, "middle_drift_strata", FragmentOrigin::rho_to_L, [&](double m) {
        const double sm = s(m);
        return std::function<double(double)>([&, sm](double x) {
          return b(x) + (x > 0.0 ? s.derivative(x) / (s(x) - sm) : 0.0);
        });
      });
      stratified_drift(bat, "pre_rho_drift", FragmentOrigin::pre_rho, [&](double) {
        return std::function<double(double)>([&](double x) { return b(x); });
      });
      bat.independence("independence_state_rho_post_L", &PathRecord::state_rho,
                       &PathRecord::post_duration);
      break;
    }
    case ScenarioKind::transient_bessel3: {
      const double y = sc.y;
      bat.last_passage_survival();
      bat.uniform_x_rho();
      bat.law_transform([y](double u) { return y / u; });
      bat.drift("post_L_drift", "post_L_drift", FragmentOrigin::post_L,
                [y](double x) { return 1.0 / x + y / (x * (x - y)); }, y + 0.1, y + 1.5, 14);
      bat.independence("independence_state_rho_post_L", &PathRecord::state_rho,
                       &PathRecord::state_after_L);
      break;
    }
    case ScenarioKind::vanishing_martingale: {
      const double y = sc.y;
      bat.last_passage_survival();
      bat.uniform_x_rho();
      bat.law_transform([y](double u) { return y * u; });
      break;
    }
  }
}

/// Drift of one fragment kind per Y_rho decile stratum. `target_for(m)` gives
/// the target for stratum median m; bins of width 0.125 run from -1 to 0.1
/// below the stratum's smallest m, with 0 on a bin edge. Passes when at least
/// 80% of at least 8 evaluated strata agree.
inline void stratified_drift(Battery& bat, const std::string& name, FragmentOrigin origin,
                             const std::function<std::function<double(double)>(double)>& target_for) {
  const auto groups = bat.strata([](const PathRecord& r) { return r.state_rho; });
  std::size_t evaluated = 0, passed = 0;
  std::ostringstream notes;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto& g = groups[k];
    if (g.size() < kMinStratum) {
      notes << "stratum " << k << " skipped (" << g.size() << " paths); ";
      continue;
    }
    const double m = g[g.size() / 2]->state_rho;
    constexpr double width = 0.125;
    const double hi = std::floor((g.front()->state_rho - 0.1) / width) * width;
    const auto bins = static_cast<std::size_t>(std::lround((hi + 1.0) / width));
    if (bins == 0) {
      notes << "stratum " << k << " skipped (no bins below m); ";
      continue;
    }
    const std::size_t before = bat.result.reports.size();
    bat.drift(name, name + "_" + std::to_string(k), origin, target_for(m), -1.0, hi, bins,
              &g, k == groups.size() / 2);
    const TestReport r = bat.result.reports.back();
    bat.result.reports.resize(before);
    if (r.skipped) {
      notes << "stratum " << k << " skipped (" << r.notes << "); ";
      continue;
    }
    ++evaluated;
    passed += r.pass;
    notes << "stratum " << k << " m=" << m << ": " << r.notes << "; ";
  }
  if (evaluated < 8) {
    auto r = Battery::insufficient(name, bat.good.size(), kStrata * kMinStratum);
    r.notes += "; " + notes.str();
    return bat.add(std::move(r), bat.claim_of(name));
  }
  TestReport r;
  r.name = name;
  r.n_samples = bat.good.size();
  r.statistic = static_cast<double>(passed) / static_cast<double>(evaluated);
  r.p_value_or_bound = 0.8;
  r.tolerance_used = bat.ctx.cfg.rel_tol;
  r.pass = r.statistic >= 0.8;
  r.notes = std::to_string(passed) + "/" + std::to_string(evaluated) + " strata agree; " + notes.str();
  bat.add(std::move(r), bat.claim_of(name));
}

inline void tabulate_samples(const std::vector<PathRecord>& recs, ExperimentResult& result) {
  for (const auto& r : recs) {
    auto row = [&](const char* q, double v) {
      if (std::isfinite(v)) result.samples.push_back({r.path_index, q, v});
    };
    row("censored", r.censored ? 1.0 : 0.0);
    if (r.censored || r.excluded) continue;
    row("terminal_time", r.terminal.beyond_horizon ? NAN : r.terminal.time);
    row("L_time", r.L.time);
    row("rho_time", r.rho.time);
    row("x_rho", r.x_rho);
    row("state_rho", r.state_rho);
    row("post_L_duration", r.post_duration);
  }
}

}  // namespace detail

/// Simulates cfg.n_paths paths and evaluates the scenario battery.
/// Throws ExperimentAbort when more than half of the paths are censored or a
/// path becomes numerically pathological.
inline ExperimentResult run_scenario(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  detail::RunContext ctx{cfg,
                         TimeGrid::from_horizon(cfg.step_h, cfg.resolved_horizon()),
                         cfg.scenario.azema_rule(),
                         std::nullopt,
                         DriftSpec::zero(),
                         cfg.resolved_zero_band(),
                         cfg.resolved_epsilon()};
  if (cfg.scenario.kind == ScenarioKind::recurrent_diffusion) {
    ctx.drift = cfg.scenario.drift.spec();
    ctx.scale = ScaleFunction::recurrent(ctx.drift);
  } else if (cfg.scenario.kind == ScenarioKind::transient_bessel3) {
    ctx.scale = ScaleFunction::transient_bessel3();
  }
  std::vector<PathRecord> records(cfg.n_paths);
  try {
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
      records[i] = detail::simulate_record(i, ctx);
    });
  } catch (const PathError& e) {
    throw ExperimentAbort(std::string("path pathology: ") + e.what());
  }
  ExperimentResult result;
  result.config = cfg;
  result.n_paths = cfg.n_paths;
  std::map<std::string, std::pair<std::size_t, std::uint64_t>> excluded_by_reason;
  for (const auto& r : records) {
    result.n_censored += r.censored;
    result.n_excluded += r.excluded;
    if (r.excluded) {
      auto [it, fresh] = excluded_by_reason.try_emplace(r.diagnostic, 0, r.path_index);
      ++it->second.first;
    }
  }
  for (const auto& [reason, tally] : excluded_by_reason) {
    result.diagnostics.push_back(std::to_string(tally.first) + " path(s) excluded (first: path " +
                                 std::to_string(tally.second) + "): " + reason);
  }
  result.censoring_fraction =
      static_cast<double>(result.n_censored) / static_cast<double>(cfg.n_paths);
  if (result.censoring_fraction > 0.5) {
    std::ostringstream os;
    os << "censoring fraction " << result.censoring_fraction
       << " exceeds 50%; raise the horizon (currently " << ctx.grid.horizon() << ")";
    throw ExperimentAbort(os.str());
  }
  detail::Battery bat{ctx, {}, result};
  for (const auto& r : records) {
    if (cfg.uncensored_target && bat.good.size() == *cfg.uncensored_target) break;
    if (!r.censored && !r.excluded) bat.good.push_back(&r);
  }
  if (cfg.uncensored_target && bat.good.size() < *cfg.uncensored_target) {
    result.diagnostics.push_back("only " + std::to_string(bat.good.size()) +
                                 " usable paths, fewer than the uncensored target " +
                                 std::to_string(*cfg.uncensored_target));
  }
  if (cfg.n_paths < kMinPaths) {
    for (const auto& c : scenario_claims(cfg.scenario.kind)) {
      auto r = detail::Battery::insufficient(c.test, cfg.n_paths, kMinPaths);
      r.notes += " (n_paths below the battery minimum)";
      bat.add(std::move(r), c.reference);
    }
  } else {
    detail::run_battery(bat);
  }
  detail::tabulate_samples(records, result);
  if (cfg.keep_records) result.records = std::move(records);
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

/// Coverage matrix: scenario name -> claims exercised by its battery.
inline std::vector<std::pair<std::string, std::vector<Claim>>> coverage_matrix() {
  std::vector<std::pair<std::string, std::vector<Claim>>> out;
  for (auto k : kAllScenarios) out.emplace_back(std::string(to_string(k)), scenario_claims(k));
  return out;
}

}  // namespace azema
