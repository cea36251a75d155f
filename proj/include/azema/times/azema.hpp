// Explicit Azema supermartingales Z_t = P(L > t | F_t) and their
// complements X = 1 - Z for the scenario catalogue.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "azema/core/paths.hpp"
#include "azema/scale/scale_function.hpp"
#include "azema/times/random_times.hpp"

namespace azema {

/// How X is computed from the state path.
///   positive_part   X = B^+_{t ^ T1}                   (L = last zero before T1)
///   skew            X = alpha B^+ + beta B^-, stopped  (alpha = beta = 1: |B|)
///   recurrent       X = s(Y_{t ^ T1})^+ / s(1)
///   transient       Z = s(R_t)/s(y) ^ 1                (L = g_y)
///   vanishing       Z = M_t / y ^ 1                    (L = g = sup{M = y})
struct AzemaRule {
  enum class Kind { positive_part, skew, recurrent, transient, vanishing };
  Kind kind = Kind::positive_part;
  double alpha = 1.0;
  double beta = 1.0;
  double y = 1.0;

  bool needs_scale() const { return kind == Kind::recurrent || kind == Kind::transient; }
  std::string name() const {
    switch (kind) {
      case Kind::positive_part: return "positive_part";
      case Kind::skew: return "skew";
      case Kind::recurrent: return "recurrent";
      case Kind::transient: return "transient";
      case Kind::vanishing: return "vanishing";
    }
    return "unknown";
  }
};

struct AzemaProcess {
  TimeGrid grid;
  std::vector<double> X;  // P(L <= t | F_t)
  std::vector<double> Z;  // 1 - X
  std::string scenario;
};

namespace detail {

inline double clip_unit(double v) {
  // only absorbs roundoff; anything larger is a bug upstream
  if (v < 0.0 && v > -1e-12) return 0.0;
  if (v > 1.0 && v < 1.0 + 1e-12) return 1.0;
  return v;
}

}  // namespace detail

/// Evaluates X (and Z = 1 - X) along `state`. For stopped scenarios pass the
/// terminal mark: from its index on, X is held at 1 (the stopped value).
inline AzemaProcess azema_process(const SamplePath& state, const AzemaRule& rule,
                                  const std::optional<RandomTimeMark>& terminal = std::nullopt,
                                  const ScaleFunction* scale = nullptr) {
  if (rule.needs_scale() && scale == nullptr) {
    throw std::invalid_argument("azema_process: scenario '" + rule.name() +
                                "' requires a scale function");
  }
  const auto& x = state.values;
  AzemaProcess az{state.grid, std::vector<double>(x.size()), std::vector<double>(x.size()),
                  rule.name()};
  std::size_t stop_at = x.size();
  if (terminal && !terminal->censored) stop_at = std::min(terminal->index, x.size());
  auto sc = [scale](double v) { return scale != nullptr ? scale->eval(v) : NAN; };
  const double s1 = rule.kind == AzemaRule::Kind::recurrent ? sc(1.0) : 1.0;
  const double sy = rule.kind == AzemaRule::Kind::transient ? sc(rule.y) : 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double v = 1.0;
    if (k < stop_at) {
      switch (rule.kind) {
        case AzemaRule::Kind::positive_part:
          v = std::max(x[k], 0.0);
          break;
        case AzemaRule::Kind::skew:
          v = rule.alpha * std::max(x[k], 0.0) + rule.beta * std::max(-x[k], 0.0);
          break;
        case AzemaRule::Kind::recurrent:
          v = x[k] > 0.0 ? sc(x[k]) / s1 : 0.0;
          break;
        case AzemaRule::Kind::transient:
          v = 1.0 - std::min(sc(x[k]) / sy, 1.0);
          break;
        case AzemaRule::Kind::vanishing:
          v = 1.0 - std::min(x[k] / rule.y, 1.0);
          break;
      }
    }
    v = detail::clip_unit(v);
    az.X[k] = v;
    az.Z[k] = 1.0 - v;
  }
  return az;
}

/// Last grid point strictly before L at which X attains max_{t < L} X_t
/// (ties go to the last attaining index). With `tie_break` (one value per grid
/// point), ties in X are resolved by the larger tie_break value first; this
/// locates the maximum of the state where X is flat at 0.
inline RandomTimeMark pre_maximum_rho(const AzemaProcess& az, const RandomTimeMark& L,
                                      std::span<const double> tie_break = {}) {
  RandomTimeMark m{TimeKind::pre_maximum_rho, 0, 0.0, L.censored, false};
  if (L.censored) return m;
  const auto& X = az.X;
  if (!tie_break.empty() && tie_break.size() < X.size()) {
    throw std::invalid_argument("pre_maximum_rho: tie_break shorter than X");
  }
  std::size_t best = 0;
  double best_v = -1.0;
  double best_t = -HUGE_VAL;
  for (std::size_t k = 0; k < X.size(); ++k) {
    if (!L.beyond_horizon && !(az.grid.time(k) < L.time)) break;
    const double t = tie_break.empty() ? 0.0 : tie_break[k];
    if (X[k] > best_v || (X[k] == best_v && t >= best_t)) {
      best_v = X[k];
      best_t = t;
      best = k;
    }
  }
  m.index = best;
  m.time = az.grid.time(best);
  return m;
}

struct RunningExtremes {
  std::vector<double> S;     // running max of X
  std::vector<double> Zrho;  // running min of Z = P(rho > t | F_t)
};

inline RunningExtremes running_extremes(const AzemaProcess& az) {
  RunningExtremes r{std::vector<double>(az.X.size()), std::vector<double>(az.Z.size())};
  double s = -std::numeric_limits<double>::infinity();
  double z = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < az.X.size(); ++k) {
    s = std::max(s, az.X[k]);
    z = std::min(z, az.Z[k]);
    r.S[k] = s;
    r.Zrho[k] = z;
  }
  return r;
}

}  // namespace azema
