// Local time estimators for a discretized path at a fixed level.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "azema/core/paths.hpp"

namespace azema {

enum class LocalTimeMethod { occupation, tanaka_residual };

struct LocalTimeEstimate {
  TimeGrid grid;
  std::vector<double> values;      // rectified: nondecreasing, starts at 0
  std::vector<double> raw;         // before rectification
  double level = 0.0;
  LocalTimeMethod method = LocalTimeMethod::tanaka_residual;
  double epsilon = 0.0;

  double terminal() const { return values.back(); }
};

/// occupation:       l_t ~ (1/2eps) Leb{u <= t : |x_u - level| < eps}
///                   (left-endpoint sum; eps must be at least sqrt(h))
/// tanaka_residual:  l_t ~ 2 ((x_t - a)^+ - (x_0 - a)^+ - sum 1{x > a} dx)
/// Both are rectified to be nondecreasing by a running maximum.
inline LocalTimeEstimate local_time(const SamplePath& path, double level, LocalTimeMethod method,
                                    double epsilon) {
  const auto& x = path.values;
  if (x.empty()) throw std::invalid_argument("local_time: empty path");
  const double h = path.grid.step;
  if (method == LocalTimeMethod::occupation &&
      !(epsilon >= std::sqrt(h) * (1.0 - 1e-12))) {
    throw std::invalid_argument("local_time: epsilon below grid resolution sqrt(h)");
  }
  LocalTimeEstimate est{path.grid, std::vector<double>(x.size(), 0.0),
                        std::vector<double>(x.size(), 0.0), level, method, epsilon};
  if (method == LocalTimeMethod::occupation) {
    const double w = h / (2.0 * epsilon);
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
      est.raw[k + 1] = est.raw[k] + (std::abs(x[k] - level) < epsilon ? w : 0.0);
    }
  } else {
    const double start = std::max(x[0] - level, 0.0);
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
      if (x[k] > level) integral += x[k + 1] - x[k];
      est.raw[k + 1] = 2.0 * (std::max(x[k + 1] - level, 0.0) - start - integral);
    }
  }
  double running = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    running = std::max(running, est.raw[k]);
    est.values[k] = running;
  }
  return est;
}

}  // namespace azema
