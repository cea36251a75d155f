// Independent reference samples for fragment-law comparisons.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "azema/core/paths.hpp"
#include "azema/core/rng.hpp"
#include "azema/times/random_times.hpp"

namespace azema {

/// First grid time at which |B| >= m, B a Brownian motion from 0 on `grid`.
/// Grid-valued, like the pre-maximum time it is compared with. Returns NaN
/// if the level is not reached within the grid.
inline double abs_bm_first_grid_hit(double m, const TimeGrid& grid, SeedSpec seed) {
  const auto b = simulate_bm(grid, seed, [m](double v) { return std::abs(v) >= m; });
  if (std::abs(b.values.back()) < m) return NAN;
  return b.grid.horizon();
}

/// First passage of BES(3) from 0 to `level`, linearly interpolated inside
/// the crossing step. NaN if not reached within the grid.
inline double bessel3_first_hit(double level, const TimeGrid& grid, SeedSpec seed) {
  const auto r = simulate_bessel3(0.0, grid, seed, [level](double v) { return v >= level; });
  const auto m = first_hitting(r, level);
  return m.censored ? NAN : m.time;
}

inline std::vector<double> bessel3_first_hit_sample(double level, std::size_t n,
                                                    const TimeGrid& grid,
                                                    std::uint64_t oracle_seed) {
  std::vector<double> out;
  out.reserve(n);
  for (std::uint64_t i = 0; out.size() < n && i < 4 * n + 100; ++i) {
    const double t = bessel3_first_hit(level, grid, SeedSpec{oracle_seed, i});
    if (std::isfinite(t)) out.push_back(t);
  }
  return out;
}

}  // namespace azema
