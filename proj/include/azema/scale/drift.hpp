#pragma once

#include <functional>
#include <string>

namespace azema {

/// Named drift b for dY = b(Y) dt + dB.
struct DriftSpec {
  std::string name;
  std::function<double(double)> b;
  bool is_zero = false;

  double operator()(double x) const { return is_zero ? 0.0 : b(x); }

  static DriftSpec zero() {
    return {"zero", [](double) { return 0.0; }, true};
  }
  /// Ornstein-Uhlenbeck pull towards 0: b(x) = -rate * x.
  static DriftSpec mean_reverting(double rate) {
    if (rate == 0.0) return zero();
    return {"ou(" + std::to_string(rate) + ")", [rate](double x) { return -rate * x; }, false};
  }
  static DriftSpec constant(double mu) {
    if (mu == 0.0) return zero();
    return {"constant(" + std::to_string(mu) + ")", [mu](double) { return mu; }, false};
  }
};

}  // namespace azema
