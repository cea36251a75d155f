#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>

namespace azema {

/// One statistical verdict. `pass` is a deterministic function of the
/// statistic, the threshold and the configured alpha; `skipped` reports that
/// the test could not run (e.g. too few samples) and is never a pass.
struct TestReport {
  std::string name;
  double statistic = 0.0;
  double p_value_or_bound = 0.0;
  bool pass = false;
  bool skipped = false;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  double tolerance_used = 0.0;
  std::string claim;  // short reference to the result the test exercises
  std::string notes;

  static TestReport skip(std::string name, std::string claim, std::string why,
                         std::size_t n = 0) {
    TestReport r;
    r.name = std::move(name);
    r.claim = std::move(claim);
    r.skipped = true;
    r.n_samples = n;
    r.notes = std::move(why);
    return r;
  }
};

}  // namespace azema
