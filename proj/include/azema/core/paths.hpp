// Path generation on uniform time grids: Brownian motion, unit-diffusion
// SDEs (Euler-Maruyama), exact Bessel(3) as the norm of a 3-d Brownian
// motion, and bracket clocks with their right-continuous inverses.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "azema/core/rng.hpp"

namespace azema {

class PathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TimeGrid {
  double step = 1e-3;
  std::size_t n_steps = 0;

  static TimeGrid make(double step, std::size_t n_steps) {
    TimeGrid g{step, n_steps};
    g.validate();
    return g;
  }

  /// Grid covering [0, horizon]; the step count is rounded to the nearest
  /// integer so that e.g. horizon 1 with step 1e-3 gives exactly 1000 steps.
  static TimeGrid from_horizon(double step, double horizon) {
    if (!(step > 0.0) || !(horizon > 0.0) || !std::isfinite(step) || !std::isfinite(horizon)) {
      throw std::invalid_argument("time grid needs step > 0 and horizon > 0");
    }
    const auto n = static_cast<std::size_t>(std::llround(horizon / step));
    return make(step, std::max<std::size_t>(n, 1));
  }

  void validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) {
      throw std::invalid_argument("time grid step must be positive and finite");
    }
    if (n_steps == 0) throw std::invalid_argument("time grid needs at least one step");
  }

  double horizon() const noexcept { return static_cast<double>(n_steps) * step; }
  double time(std::size_t k) const noexcept { return static_cast<double>(k) * step; }
  std::size_t size() const noexcept { return n_steps + 1; }

  /// Largest grid index whose time does not exceed t (clamped to the grid).
  std::size_t index_at_or_before(double t) const noexcept {
    if (t <= 0.0) return 0;
    const double k = std::floor(t / step + 1e-9);
    return std::min(static_cast<std::size_t>(k), n_steps);
  }

  bool operator==(const TimeGrid&) const = default;
};

struct SamplePath {
  TimeGrid grid;
  std::vector<double> values;
  std::string label;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
  double back() const { return values.back(); }

  /// Linear interpolation at time t inside the grid.
  double at_time(double t) const {
    if (t <= 0.0) return values.front();
    const double pos = t / grid.step;
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= values.size()) return values.back();
    const double w = pos - static_cast<double>(k);
    return values[k] + w * (values[k + 1] - values[k]);
  }
};

/// Nondecreasing time change sampled on a grid, starting at 0.
struct Clock {
  TimeGrid grid;
  std::vector<double> values;

  double at_time(double t) const {
    if (t <= 0.0) return values.front();
    const double pos = t / grid.step;
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= values.size()) return values.back();
    const double w = pos - static_cast<double>(k);
    return values[k] + w * (values[k + 1] - values[k]);
  }
};

enum class NoiseMode { stochastic, none };

/// Optional early-termination rule. When it returns true for the newest
/// value, generation stops and the returned path is truncated there (its grid
/// shrinks accordingly). Draws are indexed by step, so the retained prefix is
/// identical to the corresponding prefix of the untruncated path.
using StopRule = std::function<bool(double)>;

namespace detail {

inline void check_finite(double v, std::size_t k, const char* what) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << what << ": non-finite value " << v << " at step " << k;
    throw PathError(os.str());
  }
}

inline void truncate(SamplePath& path, std::size_t last_index) {
  path.values.resize(last_index + 1);
  path.grid.n_steps = last_index;
}

}  // namespace detail

inline SamplePath simulate_bm(const TimeGrid& grid, SeedSpec seed, const StopRule& stop = {}) {
  grid.validate();
  SamplePath path{grid, {}, "brownian"};
  path.values.resize(grid.size());
  RandomStream rng(seed, 0);
  const double sd = std::sqrt(grid.step);
  double b = 0.0;
  path.values[0] = 0.0;
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    b += sd * rng.normal();
    path.values[k + 1] = b;
    if (stop && stop(b)) {
      detail::truncate(path, k + 1);
      break;
    }
  }
  return path;
}

/// SDE path together with the Brownian increments that drove it.
struct DrivenPath {
  SamplePath path;
  std::vector<double> increments;  // increments[k] = B_{k+1} - B_k
};

/// Euler-Maruyama for dY = b(Y) dt + dB. The driving increments are the same
/// draws simulate_bm uses for the same seed.
template <std::invocable<double> Drift>
DrivenPath simulate_sde_driven(Drift&& drift, double x0, const TimeGrid& grid, SeedSpec seed,
                               NoiseMode noise = NoiseMode::stochastic,
                               const StopRule& stop = {}) {
  grid.validate();
  if (!std::isfinite(x0)) throw std::invalid_argument("simulate_sde: x0 must be finite");
  DrivenPath out{SamplePath{grid, {}, "sde"}, {}};
  auto& values = out.path.values;
  values.resize(grid.size());
  out.increments.resize(grid.n_steps);
  RandomStream rng(seed, 0);
  const double h = grid.step;
  const double sd = std::sqrt(h);
  double y = x0;
  values[0] = y;
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const double b = drift(y);
    detail::check_finite(b, k, "simulate_sde drift");
    const double db = noise == NoiseMode::stochastic ? sd * rng.normal() : 0.0;
    out.increments[k] = db;
    y = y + b * h + db;
    detail::check_finite(y, k + 1, "simulate_sde state");
    values[k + 1] = y;
    if (stop && stop(y)) {
      detail::truncate(out.path, k + 1);
      out.increments.resize(k + 1);
      break;
    }
  }
  return out;
}

template <std::invocable<double> Drift>
SamplePath simulate_sde(Drift&& drift, double x0, const TimeGrid& grid, SeedSpec seed,
                        NoiseMode noise = NoiseMode::stochastic, const StopRule& stop = {}) {
  return simulate_sde_driven(std::forward<Drift>(drift), x0, grid, seed, noise, stop).path;
}

/// Bessel(3) path plus the pieces needed downstream: the radial Brownian
/// increments (W . dW / |W|) and the 3-d terminal position.
struct Bessel3Path {
  SamplePath radius;
  std::vector<double> radial_increments;
  std::array<double, 3> terminal{};
};

inline Bessel3Path simulate_bessel3_driven(double r0, const TimeGrid& grid, SeedSpec seed,
                                           const StopRule& stop = {}) {
  grid.validate();
  if (!(r0 >= 0.0) || !std::isfinite(r0)) {
    throw std::invalid_argument("simulate_bessel3: r0 must be finite and >= 0");
  }
  Bessel3Path out{SamplePath{grid, {}, "bessel3"}, {}, {}};
  auto& values = out.radius.values;
  values.resize(grid.size());
  out.radial_increments.resize(grid.n_steps);
  RandomStream s1(seed, 1), s2(seed, 2), s3(seed, 3);
  const double sd = std::sqrt(grid.step);
  std::array<double, 3> w{r0, 0.0, 0.0};
  double r = r0;
  values[0] = r;
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const std::array<double, 3> dw{sd * s1.normal(), sd * s2.normal(), sd * s3.normal()};
    out.radial_increments[k] =
        r > 0.0 ? (w[0] * dw[0] + w[1] * dw[1] + w[2] * dw[2]) / r : dw[0];
    w[0] += dw[0];
    w[1] += dw[1];
    w[2] += dw[2];
    r = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    values[k + 1] = r;
    if (stop && stop(r)) {
      detail::truncate(out.radius, k + 1);
      out.radial_increments.resize(k + 1);
      break;
    }
  }
  out.terminal = w;
  return out;
}

inline SamplePath simulate_bessel3(double r0, const TimeGrid& grid, SeedSpec seed,
                                   const StopRule& stop = {}) {
  return simulate_bessel3_driven(r0, grid, seed, stop).radius;
}

/// Outcome of following a Bessel(3) path past the end of its grid until it
/// either escapes far from `level` or exhausts its time budget.
struct Bessel3Escape {
  bool returned = false;           // crossed `level` after the grid horizon
  double last_return_time = 0.0;   // absolute time of the last such crossing
  double max_before_return = 0.0;  // running max of R up to that crossing
  bool resolved = false;           // reached escape_radius within max_time
  double end_time = 0.0;
  std::size_t steps = 0;
};

struct EscapeOptions {
  double fine_step = 1e-3;
  double escape_radius = 1e4;
  double max_time = 1e12;
  /// Step size is max(fine_step, (distance to level / step_divisor)^2).
  double step_divisor = 8.0;
  std::size_t max_steps = 2'000'000;
};

/// Continues a 3-d Brownian motion from `start` (at time `start_time`) with
/// exact Gaussian transitions. Steps are adaptive: fine near `level`, growing
/// quadratically with the distance from it, so an excursion to large radii
/// costs only logarithmically many steps. Uses stream 4 of the same seed.
inline Bessel3Escape resolve_bessel3_escape(std::array<double, 3> start, double start_time,
                                            double level, SeedSpec seed,
                                            const EscapeOptions& opt = {}) {
  RandomStream s(seed, 4);
  Bessel3Escape out;
  auto radius = [](const std::array<double, 3>& w) {
    return std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  };
  double r = radius(start);
  double t = start_time;
  double running_max = r;
  auto w = start;
  while (true) {
    if (r >= opt.escape_radius) {
      out.resolved = true;
      break;
    }
    if (t - start_time >= opt.max_time || out.steps >= opt.max_steps) break;
    const double d = std::abs(r - level);
    const double step = std::max(opt.fine_step, (d / opt.step_divisor) * (d / opt.step_divisor));
    const double sd = std::sqrt(step);
    const double z0 = s.normal(), z1 = s.normal(), z2 = s.normal();
    w[0] += sd * z0;
    w[1] += sd * z1;
    w[2] += sd * z2;
    const double r_next = radius(w);
    ++out.steps;
    const double a = r - level;
    const double b = r_next - level;
    if ((a > 0.0) != (b > 0.0) || std::abs(b) < 1e-12) {
      out.returned = true;
      out.last_return_time = a == b ? t + step : t + step * (a / (a - b));
      out.max_before_return = std::max(running_max, r);
    }
    running_max = std::max(running_max, r_next);
    r = r_next;
    t += step;
  }
  out.end_time = t;
  return out;
}

/// Left-endpoint Riemann sum of a nonnegative integrand: C_0 = 0,
/// C_{k+1} = C_k + f_k h. The last integrand entry is not used.
inline Clock accumulate_bracket(std::span<const double> integrand_sq, const TimeGrid& grid) {
  grid.validate();
  if (integrand_sq.size() != grid.size() && integrand_sq.size() != grid.n_steps) {
    throw std::invalid_argument("accumulate_bracket: integrand length does not match grid");
  }
  Clock clock{grid, std::vector<double>(grid.size(), 0.0)};
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const double f = integrand_sq[k];
    if (!(f >= 0.0) || !std::isfinite(f)) {
      std::ostringstream os;
      os << "accumulate_bracket: integrand must be finite and nonnegative (index " << k
         << ", value " << f << ")";
      throw std::invalid_argument(os.str());
    }
    clock.values[k + 1] = clock.values[k] + f * grid.step;
  }
  return clock;
}

/// Re-indexes `path` by the right-continuous inverse of `clock`,
/// tau(u) = inf{t : C_t > u}, sampled on a fresh uniform grid in clock time
/// with step `out_step` (defaults to the input step).
inline SamplePath time_change_inverse(const SamplePath& path, const Clock& clock,
                                      double out_step = 0.0) {
  if (path.grid != clock.grid || path.values.size() != clock.values.size()) {
    throw std::invalid_argument("time_change_inverse: path and clock grids differ");
  }
  const double total = clock.values.back();
  if (!(total > 0.0)) {
    throw std::invalid_argument("time_change_inverse: clock is flat over the whole window");
  }
  const double h = out_step > 0.0 ? out_step : path.grid.step;
  const auto n_out = static_cast<std::size_t>(std::floor(total / h * (1.0 + 1e-12)));
  SamplePath out{TimeGrid{h, n_out}, {}, path.label + ":time-changed"};
  out.values.reserve(n_out + 1);
  const auto& c = clock.values;
  std::size_t k = 0;
  for (std::size_t j = 0; j <= n_out; ++j) {
    const double u = std::min(static_cast<double>(j) * h, total);
    // first k with C_{k+1} > u
    while (k + 1 < c.size() && c[k + 1] <= u) ++k;
    double t;
    if (k + 1 >= c.size()) {
      t = path.grid.horizon();
    } else {
      const double span = c[k + 1] - c[k];
      const double w = span > 0.0 ? (u - c[k]) / span : 0.0;
      t = (static_cast<double>(k) + w) * path.grid.step;
    }
    out.values.push_back(path.at_time(t));
  }
  if (n_out == 0) out.grid.n_steps = 0;
  return out;
}

}  // namespace azema
