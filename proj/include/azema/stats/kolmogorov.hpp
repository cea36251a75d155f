// Kolmogorov-Smirnov statistics with asymptotic p-values.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "azema/stats/report.hpp"

namespace azema {

inline constexpr double kDefaultAlpha = 0.01;
inline constexpr std::size_t kMinKsSamples = 50;

/// Survival function of the Kolmogorov distribution, P(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-theta form converges fast for small lambda
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double sum = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double odd = 2.0 * k - 1.0;
      sum += std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// sup_x |F_n(x) - x| against Uniform(0, 1).
inline double ks_uniform_statistic(std::span<const double> samples) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - sorted[i], sorted[i] - di / n});
  }
  return d;
}

inline double ks_two_sample_statistic(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

inline TestReport ks_uniform(std::span<const double> samples, double alpha = kDefaultAlpha) {
  if (samples.size() < kMinKsSamples) {
    throw std::invalid_argument("ks_uniform: needs at least 50 samples");
  }
  for (double v : samples) {
    if (!(v >= 0.0 && v <= 1.0)) {
      std::ostringstream os;
      os << "ks_uniform: sample " << v << " outside [0, 1]";
      throw std::invalid_argument(os.str());
    }
  }
  TestReport r;
  r.name = "ks_uniform";
  r.n_samples = samples.size();
  r.statistic = ks_uniform_statistic(samples);
  r.p_value_or_bound =
      kolmogorov_survival(std::sqrt(static_cast<double>(samples.size())) * r.statistic);
  r.tolerance_used = alpha;
  r.pass = r.p_value_or_bound > alpha;
  return r;
}

inline TestReport ks_two_sample(std::span<const double> a, std::span<const double> b,
                                double alpha = kDefaultAlpha) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty input");
  if (a.size() < kMinKsSamples || b.size() < kMinKsSamples) {
    throw std::invalid_argument("ks_two_sample: needs at least 50 samples on each side");
  }
  TestReport r;
  r.name = "ks_two_sample";
  r.n_samples = a.size() + b.size();
  r.statistic = ks_two_sample_statistic(a, b);
  const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
  r.p_value_or_bound = kolmogorov_survival(std::sqrt(n * m / (n + m)) * r.statistic);
  r.tolerance_used = alpha;
  r.pass = r.p_value_or_bound > alpha;
  std::ostringstream os;
  os << "sizes " << a.size() << " vs " << b.size();
  r.notes = os.str();
  return r;
}

}  // namespace azema
