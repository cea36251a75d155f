// Detection of hitting times, last zeros, last passages and the
// pre-maximum pseudo-stopping time on discretized paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string_view>

#include "azema/core/paths.hpp"

namespace azema {

enum class TimeKind { first_hit, first_hit_abs, last_zero_before, last_passage, pre_maximum_rho };

inline std::string_view to_string(TimeKind k) {
  switch (k) {
    case TimeKind::first_hit: return "first_hit";
    case TimeKind::first_hit_abs: return "first_hit_abs";
    case TimeKind::last_zero_before: return "last_zero_before";
    case TimeKind::last_passage: return "last_passage";
    case TimeKind::pre_maximum_rho: return "pre_maximum_rho";
  }
  return "unknown";
}

/// A random time located on a path. `index` is the first grid index at or
/// after the (interpolated) time, except for pre_maximum_rho which sits on a
/// grid point. Censored marks must not be mixed into uncensored statistics.
/// `beyond_horizon` marks a time known to lie after the grid end (resolved
/// by continuing the path); then `time` may exceed the grid horizon.
struct RandomTimeMark {
  TimeKind kind = TimeKind::first_hit;
  std::size_t index = 0;
  double time = 0.0;
  bool censored = false;
  bool beyond_horizon = false;

  bool operator==(const RandomTimeMark&) const = default;
};

class ScenarioContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Values within this distance of a level count as touching it.
inline constexpr double kZeroTolerance = 1e-12;

/// First crossing (or touch) of `level`, linearly interpolated inside the
/// crossing step. Censored if the path never reaches the level.
inline RandomTimeMark first_hitting(const SamplePath& path, double level,
                                    TimeKind kind = TimeKind::first_hit) {
  RandomTimeMark m{kind, 0, 0.0, false, false};
  const auto& x = path.values;
  const double h = path.grid.step;
  if (x.empty()) {
    m.censored = true;
    return m;
  }
  const double d0 = x[0] - level;
  if (std::abs(d0) < kZeroTolerance) return m;
  const bool above = d0 > 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double d = x[k] - level;
    if (std::abs(d) < kZeroTolerance) {
      m.index = k;
      m.time = path.grid.time(k);
      return m;
    }
    if ((d > 0.0) != above) {
      const double prev = x[k - 1] - level;
      m.index = k;
      m.time = (static_cast<double>(k - 1) + prev / (prev - d)) * h;
      return m;
    }
  }
  m.censored = true;
  m.index = x.size() - 1;
  m.time = path.grid.time(m.index);
  return m;
}

/// Last zero of `path` strictly before `cutoff`: either a grid value within
/// kZeroTolerance of 0 or a sign change (interpolated).
inline RandomTimeMark last_zero_before(const SamplePath& path, const RandomTimeMark& cutoff) {
  RandomTimeMark m{TimeKind::last_zero_before, cutoff.index, cutoff.time, cutoff.censored, false};
  if (cutoff.censored) return m;
  const auto& x = path.values;
  const double h = path.grid.step;
  std::size_t top = std::min(cutoff.index, x.size() - 1);
  for (std::size_t j = top + 1; j-- > 0;) {
    // zero at grid point j
    if (std::abs(x[j]) < kZeroTolerance && path.grid.time(j) < cutoff.time) {
      m.index = j;
      m.time = path.grid.time(j);
      return m;
    }
    // sign change inside (j-1, j)
    if (j > 0 && ((x[j - 1] > 0.0 && x[j] < 0.0) || (x[j - 1] < 0.0 && x[j] > 0.0))) {
      const double t = (static_cast<double>(j - 1) + x[j - 1] / (x[j - 1] - x[j])) * h;
      if (t < cutoff.time) {
        m.index = j;
        m.time = t;
        return m;
      }
    }
  }
  throw ScenarioContractError("last_zero_before: no zero before the cutoff and the path does "
                              "not start at 0");
}

/// Last crossing of `level`. Censored if the path never crosses it, or if it
/// comes within `guard` of the level during the final `guard` time window
/// (a later, unobserved return is then plausible).
inline RandomTimeMark last_passage(const SamplePath& path, double level, double guard) {
  RandomTimeMark m{TimeKind::last_passage, 0, 0.0, false, false};
  const auto& x = path.values;
  const double h = path.grid.step;
  bool found = false;
  for (std::size_t j = x.size(); j-- > 0;) {
    const double d = x[j] - level;
    if (std::abs(d) < kZeroTolerance) {
      m.index = j;
      m.time = path.grid.time(j);
      found = true;
      break;
    }
    if (j > 0) {
      const double p = x[j - 1] - level;
      if ((p > 0.0 && d < 0.0) || (p < 0.0 && d > 0.0)) {
        m.index = j;
        m.time = (static_cast<double>(j - 1) + p / (p - d)) * h;
        found = true;
        break;
      }
    }
  }
  if (!found) {
    m.censored = true;
    m.index = x.size() - 1;
    m.time = path.grid.time(m.index);
    return m;
  }
  const double window_start = path.grid.horizon() - guard;
  for (std::size_t j = x.size(); j-- > 0;) {
    if (path.grid.time(j) < window_start) break;
    if (std::abs(x[j] - level) < guard) {
      m.censored = true;
      break;
    }
  }
  return m;
}

}  // namespace azema
