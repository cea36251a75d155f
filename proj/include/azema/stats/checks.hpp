// Hypothesis checks that turn distributional identities into verdicts.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "azema/core/paths.hpp"
#include "azema/core/rng.hpp"
#include "azema/stats/kolmogorov.hpp"
#include "azema/stats/report.hpp"
#include "azema/times/azema.hpp"
#include "azema/times/random_times.hpp"

namespace azema {

inline constexpr double kDefaultZ = 3.0;

struct MeanAndError {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

inline MeanAndError mean_and_error(std::span<const double> v) {
  MeanAndError r;
  r.n = v.size();
  if (v.empty()) return r;
  // shifted two-pass: exact for constant samples
  const double shift = v.front();
  double acc = 0.0;
  for (double x : v) acc += x - shift;
  r.mean = shift + acc / static_cast<double>(v.size());
  if (v.size() < 2) return r;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return r;
}

/// E[M_rho] = M_0 within z standard errors.
inline TestReport optional_stopping_check(std::span<const double> martingale_at_rho, double m0,
                                          double z = kDefaultZ) {
  TestReport r;
  r.name = "optional_stopping";
  r.claim = "E M_rho = E M_0 (pseudo-stopping time)";
  const auto ms = mean_and_error(martingale_at_rho);
  r.n_samples = ms.n;
  r.tolerance_used = z;
  r.p_value_or_bound = z * ms.se;
  const double dev = std::abs(ms.mean - m0);
  r.statistic = ms.se > 0.0 ? (ms.mean - m0) / ms.se : (dev == 0.0 ? 0.0 : HUGE_VAL);
  r.pass = ms.n > 0 && dev <= z * ms.se;
  std::ostringstream os;
  os.precision(6);
  os << "mean " << ms.mean << " vs M_0 " << m0 << ", SE " << ms.se;
  r.notes = os.str();
  return r;
}

/// Per-path ingredients of the compensator identity
/// E[1{rho <= t}] = E[log(1 / Z^rho_{t ^ rho})].
struct CompensatorTerms {
  std::vector<double> indicator;
  std::vector<double> log_term;
  bool excluded = false;
  std::string diagnostic;
};

inline CompensatorTerms compensator_terms(const AzemaProcess& az, const RandomTimeMark& rho,
                                          std::span<const double> checkpoints) {
  CompensatorTerms c;
  if (rho.censored) {
    c.excluded = true;
    c.diagnostic = "censored";
    return c;
  }
  const std::size_t last = az.Z.size() - 1;
  for (double t : checkpoints) {
    const std::size_t j = std::min({az.grid.index_at_or_before(t), rho.index, last});
    double zmin = 1.0;
    for (std::size_t k = 0; k <= j; ++k) zmin = std::min(zmin, az.Z[k]);
    if (!(zmin > 0.0)) {
      c.excluded = true;
      c.diagnostic = "Z^rho reached 0 before rho (log diverges)";
      c.indicator.clear();
      c.log_term.clear();
      return c;
    }
    c.indicator.push_back(rho.time <= t ? 1.0 : 0.0);
    c.log_term.push_back(-std::log(zmin));
  }
  return c;
}

inline TestReport compensator_check(std::span<const CompensatorTerms> terms,
                                    std::span<const double> checkpoints, double z = kDefaultZ) {
  TestReport r;
  r.name = "compensator_identity";
  r.claim = "log(1/Z^rho_{t^rho}) compensates 1{rho <= t}";
  r.tolerance_used = z;
  std::size_t excluded = 0;
  std::vector<std::vector<double>> diffs(checkpoints.size());
  for (const auto& c : terms) {
    if (c.excluded) {
      ++excluded;
      continue;
    }
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
      diffs[i].push_back(c.indicator[i] - c.log_term[i]);
    }
  }
  r.n_samples = terms.size() - excluded;
  r.pass = r.n_samples > 0;
  double worst = 0.0;
  std::ostringstream os;
  os.precision(5);
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const auto ms = mean_and_error(diffs[i]);
    const double dev = std::abs(ms.mean);
    const double ratio = ms.se > 0.0 ? dev / ms.se : (dev == 0.0 ? 0.0 : HUGE_VAL);
    worst = std::max(worst, ratio);
    if (dev > z * ms.se) r.pass = false;
    os << "t=" << checkpoints[i] << ": diff " << ms.mean << " (SE " << ms.se << "); ";
  }
  os << excluded << " path(s) excluded";
  r.statistic = worst;
  r.p_value_or_bound = z;
  r.notes = os.str();
  return r;
}

inline TestReport compensator_check(std::span<const AzemaProcess> az_paths,
                                    std::span<const RandomTimeMark> rho_marks,
                                    std::span<const double> checkpoints, double z = kDefaultZ) {
  if (az_paths.size() != rho_marks.size()) {
    throw std::invalid_argument("compensator_check: one rho mark per path required");
  }
  std::vector<CompensatorTerms> terms;
  terms.reserve(az_paths.size());
  for (std::size_t i = 0; i < az_paths.size(); ++i) {
    terms.push_back(compensator_terms(az_paths[i], rho_marks[i], checkpoints));
  }
  return compensator_check(terms, checkpoints, z);
}

struct DriftProfile {
  std::vector<double> bin_centers;
  std::vector<double> estimated_drift;
  std::vector<double> standard_errors;
  std::vector<double> target_drift;
  std::vector<std::size_t> counts;
  std::vector<bool> within;

  std::size_t size() const { return bin_centers.size(); }
};

struct DriftOptions {
  std::optional<double> lo;  // state range binned; defaults to the visited range
  std::optional<double> hi;
  std::size_t min_count = 200;
  std::size_t min_total = 10'000;
  double rel_tol = 0.15;
  double z = kDefaultZ;
  double coverage = 0.9;
};

/// Binned forward-increment drift estimate sum(dX) / sum(dt) per bin, pooled
/// over fragments (each fragment uses its own grid step). A bin agrees when |estimate - target(center)| is at most
/// max(z SE, rel_tol |target|); the test passes when at least `coverage` of the
/// occupied bins agree. Bins with fewer than `min_count` increments are
/// excluded and listed in the notes.
inline std::pair<DriftProfile, TestReport> drift_regression(
    std::span<const SamplePath> fragments, std::size_t n_bins,
    const std::function<double(double)>& target, const DriftOptions& opt = {}) {
  if (n_bins == 0) throw std::invalid_argument("drift_regression: n_bins must be positive");
  double lo = opt.lo.value_or(HUGE_VAL), hi = opt.hi.value_or(-HUGE_VAL);
  if (!opt.lo || !opt.hi) {
    for (const auto& f : fragments) {
      for (std::size_t k = 0; k + 1 < f.values.size(); ++k) {
        if (!opt.lo) lo = std::min(lo, f.values[k]);
        if (!opt.hi) hi = std::max(hi, f.values[k]);
      }
    }
    if (!opt.hi) hi = std::nextafter(hi, HUGE_VAL);
  }
  if (!(hi > lo)) throw std::invalid_argument("drift_regression: empty state range");
  const double width = (hi - lo) / static_cast<double>(n_bins);
  // ratio estimator sum(dx) / sum(dt); fragments may run on different clocks
  std::vector<double> sdx(n_bins, 0.0), sdt(n_bins, 0.0), sdx2(n_bins, 0.0), sdxdt(n_bins, 0.0),
      sdt2(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  std::size_t total = 0;
  for (const auto& f : fragments) {
    if (f.values.size() < 2) continue;
    const double dt = f.grid.step;
    for (std::size_t k = 0; k + 1 < f.values.size(); ++k) {
      const double x = f.values[k];
      ++total;
      if (!(x >= lo && x < hi)) continue;
      const auto b = std::min(static_cast<std::size_t>((x - lo) / width), n_bins - 1);
      const double dx = f.values[k + 1] - x;
      sdx[b] += dx;
      sdt[b] += dt;
      sdx2[b] += dx * dx;
      sdxdt[b] += dx * dt;
      sdt2[b] += dt * dt;
      ++count[b];
    }
  }
  if (total < opt.min_total) {
    std::ostringstream os;
    os << "drift_regression: only " << total << " pooled increments (need " << opt.min_total
       << ")";
    throw std::invalid_argument(os.str());
  }
  DriftProfile prof;
  std::ostringstream excluded;
  std::size_t n_excluded = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double center = lo + (static_cast<double>(b) + 0.5) * width;
    if (count[b] < opt.min_count) {
      ++n_excluded;
      excluded << center << " ";
      continue;
    }
    const double n = static_cast<double>(count[b]);
    const double est = sdx[b] / sdt[b];
    const double rss = std::max(0.0, sdx2[b] - 2.0 * est * sdxdt[b] + est * est * sdt2[b]);
    const double se = std::sqrt(rss * n / (n - 1.0)) / sdt[b];
    const double tgt = target(center);
    prof.bin_centers.push_back(center);
    prof.estimated_drift.push_back(est);
    prof.standard_errors.push_back(se);
    prof.target_drift.push_back(tgt);
    prof.counts.push_back(count[b]);
    prof.within.push_back(std::abs(est - tgt) <= std::max(opt.z * se, opt.rel_tol * std::abs(tgt)));
  }
  if (prof.size() == 0) {
    throw std::invalid_argument("drift_regression: no bin holds enough increments");
  }
  const auto good = static_cast<std::size_t>(std::count(prof.within.begin(), prof.within.end(), true));
  TestReport r;
  r.name = "drift_regression";
  r.n_samples = total;
  r.statistic = static_cast<double>(good) / static_cast<double>(prof.size());
  r.p_value_or_bound = opt.coverage;
  r.tolerance_used = opt.rel_tol;
  r.pass = r.statistic >= opt.coverage;
  std::ostringstream os;
  os << good << "/" << prof.size() << " occupied bins agree on [" << lo << ", " << hi << ")";
  if (n_excluded > 0) os << "; " << n_excluded << " sparse bin(s) excluded at " << excluded.str();
  r.notes = os.str();
  return {std::move(prof), std::move(r)};
}

namespace detail {

/// Mid-ranks scaled to (0, 1).
inline std::vector<double> rank_transform(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = (mid + 0.5) / static_cast<double>(v.size());
    i = j + 1;
  }
  return rank;
}

}  // namespace detail

/// Chi-square test of independence on the n_bins x n_bins table of
/// rank-binned pairs. The bin count shrinks until every expected count is
/// at least 5; fewer than 2 bins is an error.
inline TestReport independence_test(std::span<const double> u, std::span<const double> v,
                                    std::size_t n_bins, double alpha = kDefaultAlpha) {
  if (u.size() != v.size()) throw std::invalid_argument("independence_test: unpaired samples");
  if (u.size() < 500) throw std::invalid_argument("independence_test: needs n >= 500");
  const auto ru = detail::rank_transform(u);
  const auto rv = detail::rank_transform(v);
  const double n = static_cast<double>(u.size());
  std::size_t bins = n_bins;
  while (true) {
    if (bins < 2) throw std::invalid_argument("independence_test: bin merging collapsed the table");
    std::vector<double> table(bins * bins, 0.0), row(bins, 0.0), col(bins, 0.0);
    auto to_bin = [&](double r) {
      return std::min(static_cast<std::size_t>(r * static_cast<double>(bins)), bins - 1);
    };
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto a = to_bin(ru[i]), b = to_bin(rv[i]);
      table[a * bins + b] += 1.0;
      row[a] += 1.0;
      col[b] += 1.0;
    }
    double min_expected = HUGE_VAL;
    for (std::size_t a = 0; a < bins; ++a) {
      for (std::size_t b = 0; b < bins; ++b) {
        min_expected = std::min(min_expected, row[a] * col[b] / n);
      }
    }
    if (min_expected < 5.0) {
      --bins;
      continue;
    }
    double chi2 = 0.0;
    std::size_t used_rows = 0, used_cols = 0;
    for (std::size_t a = 0; a < bins; ++a) used_rows += row[a] > 0.0;
    for (std::size_t b = 0; b < bins; ++b) used_cols += col[b] > 0.0;
    for (std::size_t a = 0; a < bins; ++a) {
      for (std::size_t b = 0; b < bins; ++b) {
        const double e = row[a] * col[b] / n;
        if (e > 0.0) chi2 += (table[a * bins + b] - e) * (table[a * bins + b] - e) / e;
      }
    }
    if (used_rows < 2 || used_cols < 2) {
      throw std::invalid_argument("independence_test: degenerate marginal (constant sample)");
    }
    const double df = static_cast<double>((used_rows - 1) * (used_cols - 1));
    TestReport r;
    r.name = "independence_chi2";
    r.n_samples = u.size();
    r.statistic = chi2;
    r.p_value_or_bound = boost::math::gamma_q(0.5 * df, 0.5 * chi2);
    r.tolerance_used = alpha;
    r.pass = r.p_value_or_bound > alpha;
    std::ostringstream os;
    os << bins << "x" << bins << " table, df " << df;
    r.notes = os.str();
    return r;
  }
}

/// Two-sample KS of `samples` against transform(U_i) for n_oracle seeded
/// uniforms.
inline TestReport law_transform_check(std::span<const double> samples,
                                      const std::function<double(double)>& transform,
                                      std::size_t n_oracle, std::uint64_t seed,
                                      double alpha = kDefaultAlpha) {
  if (samples.size() < 500) throw std::invalid_argument("law_transform_check: needs n >= 500");
  RandomStream rng(SeedSpec{derive_seed(seed, "law_transform"), 0});
  std::vector<double> oracle(n_oracle);
  for (auto& o : oracle) {
    const double u = rng.uniform();
    o = transform(u);
    if (!std::isfinite(o)) {
      std::ostringstream os;
      os << "law_transform_check: transform is not finite at u = " << u;
      throw std::invalid_argument(os.str());
    }
  }
  auto r = ks_two_sample(samples, oracle, alpha);
  r.name = "law_transform";
  r.seed = seed;
  return r;
}

}  // namespace azema
