// Splitting a path at rho <= L <= terminal into its three fragments.
#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "azema/core/paths.hpp"
#include "azema/times/random_times.hpp"

namespace azema {

enum class FragmentOrigin { pre_rho, rho_to_L, post_L };

inline std::string_view to_string(FragmentOrigin o) {
  switch (o) {
    case FragmentOrigin::pre_rho: return "pre_rho";
    case FragmentOrigin::rho_to_L: return "rho_to_L";
    case FragmentOrigin::post_L: return "post_L";
  }
  return "unknown";
}

/// A piece of a path, re-zeroed in time.
struct Fragment {
  FragmentOrigin origin = FragmentOrigin::pre_rho;
  SamplePath path;
  double duration = 0.0;
  double start_value = 0.0;
  std::optional<double> conditioning;  // X_rho (or Y_rho) for pre_rho and rho_to_L

  bool empty() const { return path.values.size() < 2; }
};

class FragmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline SamplePath slice(const SamplePath& p, std::size_t first, std::size_t last) {
  SamplePath out{TimeGrid{p.grid.step, last > first ? last - first : 0}, {}, p.label};
  if (last >= first) out.values.assign(p.values.begin() + first, p.values.begin() + last + 1);
  return out;
}

}  // namespace detail

/// Three fragments of `source`:
///   pre_rho   grid points [0, rho]
///   rho_to_L  grid points [rho, L) (empty when rho is the last point before L)
///   post_L    from the last grid point before L to the terminal index, so the
///             step straddling L is included
/// Marks beyond the grid (resolved after the horizon) yield empty fragments.
/// Throws FragmentError on censored or out-of-order marks.
inline std::vector<Fragment> extract_fragments(const SamplePath& source, const RandomTimeMark& rho,
                                               const RandomTimeMark& L,
                                               const RandomTimeMark& terminal,
                                               std::optional<double> conditioning) {
  if (rho.censored || L.censored || terminal.censored) {
    throw FragmentError("extract_fragments: censored mark");
  }
  const std::size_t last = source.values.size() - 1;
  const std::size_t t_idx = std::min(terminal.index, last);
  const bool l_on_grid = !L.beyond_horizon;
  const bool rho_on_grid = !rho.beyond_horizon;
  const std::size_t l_idx = l_on_grid ? std::min(L.index, last) : last + 1;
  if (rho_on_grid && (rho.index > l_idx || rho.time > L.time)) {
    throw FragmentError("extract_fragments: rho after L");
  }
  if (l_on_grid && !terminal.beyond_horizon && l_idx > t_idx) {
    throw FragmentError("extract_fragments: L after the terminal time");
  }
  std::vector<Fragment> out(3);
  out[0].origin = FragmentOrigin::pre_rho;
  out[1].origin = FragmentOrigin::rho_to_L;
  out[2].origin = FragmentOrigin::post_L;
  out[0].conditioning = out[1].conditioning = conditioning;
  if (rho_on_grid) {
    out[0].path = detail::slice(source, 0, rho.index);
    out[0].duration = rho.time;
    out[0].start_value = source.values.front();
    const std::size_t mid_end = l_idx > 0 ? std::min(l_idx - 1, last) : 0;
    out[1].path = mid_end > rho.index ? detail::slice(source, rho.index, mid_end)
                                      : detail::slice(source, rho.index, rho.index);
    out[1].duration = L.time - rho.time;
    out[1].start_value = source.values[rho.index];
  } else {
    out[0].path = detail::slice(source, 0, last);
    out[0].duration = source.grid.horizon();
    out[1].path = detail::slice(source, last, last);
  }
  if (l_on_grid) {
    const std::size_t from = l_idx > 0 ? l_idx - 1 : 0;
    const std::size_t to = terminal.beyond_horizon ? last : t_idx;
    out[2].path = detail::slice(source, from, std::max(from, to));
    out[2].duration = (terminal.beyond_horizon ? source.grid.horizon() : terminal.time) - L.time;
    out[2].start_value = source.values[from];
  } else {
    out[2].path = detail::slice(source, last, last);
  }
  return out;
}

}  // namespace azema
