// Class-(Sigma) structure X = N + A: N is the scenario's discretized
// stochastic integral, A = X - N, and A should only grow on {X = 0}.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "azema/core/paths.hpp"
#include "azema/stats/report.hpp"

namespace azema {

struct SigmaDecomposition {
  std::vector<double> X;
  std::vector<double> N;
  std::vector<double> A;            // exactly X - N
  std::vector<double> A_monotone;   // running max of A
  std::vector<double> skorokhod;    // sup_{u<=t} (-N_u), floored at 0
  double step = 0.0;
  double max_decrease = 0.0;        // largest drop of the raw A
  bool flagged = false;             // max_decrease above 3 sqrt(h)

  /// max_t |A_t - sup_{u<=t}(-N_u)|
  double skorokhod_defect() const {
    double d = 0.0;
    for (std::size_t k = 0; k < A.size(); ++k) d = std::max(d, std::abs(A[k] - skorokhod[k]));
    return d;
  }
};

/// N_{k+1} = N_k + integrand[k] * (driving[k+1] - driving[k]); the scenario
/// prescribes the integrand (e.g. 1{B > 0} for X = B^+).
inline SigmaDecomposition sigma_decompose(const SamplePath& X, const SamplePath& driving,
                                          std::span<const double> integrand) {
  if (X.grid != driving.grid || X.values.size() != driving.values.size()) {
    throw std::invalid_argument("sigma_decompose: X and driving path are on different grids");
  }
  const std::size_t n = X.values.size();
  if (integrand.size() + 1 < n) {
    throw std::invalid_argument("sigma_decompose: integrand shorter than the grid");
  }
  SigmaDecomposition d;
  d.step = X.grid.step;
  d.X = X.values;
  d.N.assign(n, 0.0);
  d.A.assign(n, 0.0);
  d.A_monotone.assign(n, 0.0);
  d.skorokhod.assign(n, 0.0);
  const auto& b = driving.values;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    d.N[k + 1] = d.N[k] + integrand[k] * (b[k + 1] - b[k]);
  }
  double run_a = -std::numeric_limits<double>::infinity();
  double run_s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    d.A[k] = d.X[k] - d.N[k];
    run_a = std::max(run_a, d.A[k]);
    d.A_monotone[k] = run_a;
    if (k > 0) d.max_decrease = std::max(d.max_decrease, d.A[k - 1] - d.A[k]);
    run_s = std::max(run_s, -d.N[k]);
    d.skorokhod[k] = run_s;
  }
  d.flagged = d.max_decrease > 3.0 * std::sqrt(d.step);
  return d;
}

/// Mass of positive A-increments on steps where X stays above `zero_band`
/// at both ends, as a fraction of all positive A-increments.
inline double off_band_fraction(const SigmaDecomposition& dec, double zero_band,
                                double* total_mass = nullptr) {
  double off = 0.0, total = 0.0;
  for (std::size_t k = 0; k + 1 < dec.A.size(); ++k) {
    const double inc = dec.A[k + 1] - dec.A[k];
    if (inc <= 0.0) continue;
    total += inc;
    if (std::min(dec.X[k], dec.X[k + 1]) > zero_band) off += inc;
  }
  if (total_mass) *total_mass = total;
  return total > 0.0 ? off / total : 0.0;
}

/// Passes iff (a) raw A never drops by more than 3 sqrt(h), (b) the off-band
/// fraction of A-increase is at most `tolerance`, and (c) N_0 = 0.
inline TestReport check_sigma_class(const SigmaDecomposition& dec, double zero_band,
                                    double tolerance = 0.01) {
  TestReport r;
  r.name = "sigma_class";
  r.claim = "dA carried by {X = 0}";
  r.n_samples = dec.A.size();
  r.tolerance_used = tolerance;
  double total = 0.0;
  const double frac = off_band_fraction(dec, zero_band, &total);
  const bool n0 = dec.N.empty() || dec.N.front() == 0.0;
  const bool monotone = !dec.flagged;
  r.statistic = frac;
  r.p_value_or_bound = tolerance;
  r.pass = monotone && frac <= tolerance && n0;
  std::ostringstream os;
  os << "off-band fraction " << frac << " of total A-increase " << total
     << "; max raw decrease " << dec.max_decrease << "; N_0 " << (n0 ? "= 0" : "!= 0");
  r.notes = os.str();
  return r;
}

}  // namespace azema
