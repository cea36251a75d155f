// Scenario catalogue: which process is simulated, which honest time L and
// terminal time are detected, and which claims the battery exercises.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "azema/scale/drift.hpp"
#include "azema/times/azema.hpp"

namespace azema {

enum class ScenarioKind {
  williams_brownian,
  abs_brownian,
  skew_weighted,
  recurrent_diffusion,
  transient_bessel3,
  vanishing_martingale
};

inline constexpr ScenarioKind kAllScenarios[] = {
    ScenarioKind::williams_brownian,   ScenarioKind::abs_brownian,
    ScenarioKind::skew_weighted,       ScenarioKind::recurrent_diffusion,
    ScenarioKind::transient_bessel3,   ScenarioKind::vanishing_martingale};

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::williams_brownian: return "williams_brownian";
    case ScenarioKind::abs_brownian: return "abs_brownian";
    case ScenarioKind::skew_weighted: return "skew_weighted";
    case ScenarioKind::recurrent_diffusion: return "recurrent_diffusion";
    case ScenarioKind::transient_bessel3: return "transient_bessel3";
    case ScenarioKind::vanishing_martingale: return "vanishing_martingale";
  }
  return "unknown";
}

inline ScenarioKind scenario_kind_from_string(std::string_view s) {
  for (auto k : kAllScenarios) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(s) + "'");
}

/// Drift families available to the recurrent scenario.
struct DriftChoice {
  std::string family = "mean_reverting";  // zero | mean_reverting | constant
  double parameter = 1.0;                 // rate for mean_reverting, mu for constant

  DriftSpec spec() const {
    if (family == "zero") return DriftSpec::zero();
    if (family == "mean_reverting") return DriftSpec::mean_reverting(parameter);
    if (family == "constant") return DriftSpec::constant(parameter);
    throw std::invalid_argument("unknown drift family '" + family + "'");
  }
  bool operator==(const DriftChoice&) const = default;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::abs_brownian;
  double alpha = 1.0;  // skew_weighted
  double beta = 1.0;
  DriftChoice drift;   // recurrent_diffusion
  double x = 1.0;      // transient_bessel3 start / vanishing_martingale M_0
  double y = 1.0;      // passage level

  bool operator==(const Scenario&) const = default;

  std::string name() const { return std::string(to_string(kind)); }

  void validate() const {
    auto positive = [](double v, const char* field) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("scenario.") + field + " must be finite and > 0");
      }
    };
    switch (kind) {
      case ScenarioKind::skew_weighted:
        positive(alpha, "alpha");
        positive(beta, "beta");
        break;
      case ScenarioKind::recurrent_diffusion:
        (void)drift.spec();
        if (!std::isfinite(drift.parameter)) {
          throw std::invalid_argument("scenario.drift.parameter must be finite");
        }
        break;
      case ScenarioKind::transient_bessel3:
      case ScenarioKind::vanishing_martingale:
        positive(x, "x");
        positive(y, "y");
        break;
      default:
        break;
    }
  }

  double default_horizon() const {
    switch (kind) {
      case ScenarioKind::abs_brownian:
      case ScenarioKind::skew_weighted: return 20.0;
      case ScenarioKind::williams_brownian: return 100.0;
      case ScenarioKind::recurrent_diffusion: return 100.0;
      case ScenarioKind::transient_bessel3:
      case ScenarioKind::vanishing_martingale: return 50.0;
    }
    return 20.0;
  }

  bool is_brownian() const {
    return kind == ScenarioKind::williams_brownian || kind == ScenarioKind::abs_brownian ||
           kind == ScenarioKind::skew_weighted;
  }
  bool is_transient() const {
    return kind == ScenarioKind::transient_bessel3 || kind == ScenarioKind::vanishing_martingale;
  }

  AzemaRule azema_rule() const {
    AzemaRule r;
    switch (kind) {
      case ScenarioKind::williams_brownian: r.kind = AzemaRule::Kind::positive_part; break;
      case ScenarioKind::abs_brownian:
        r.kind = AzemaRule::Kind::skew;
        r.alpha = r.beta = 1.0;
        break;
      case ScenarioKind::skew_weighted:
        r.kind = AzemaRule::Kind::skew;
        r.alpha = alpha;
        r.beta = beta;
        break;
      case ScenarioKind::recurrent_diffusion: r.kind = AzemaRule::Kind::recurrent; break;
      case ScenarioKind::transient_bessel3:
        r.kind = AzemaRule::Kind::transient;
        r.y = y;
        break;
      case ScenarioKind::vanishing_martingale:
        r.kind = AzemaRule::Kind::vanishing;
        r.y = y;
        break;
    }
    return r;
  }

  /// Short parameter summary for listings.
  std::string parameters() const {
    auto num = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    switch (kind) {
      case ScenarioKind::skew_weighted: return "alpha=" + num(alpha) + ", beta=" + num(beta);
      case ScenarioKind::recurrent_diffusion:
        return "drift=" + drift.family + "(" + num(drift.parameter) + ")";
      case ScenarioKind::transient_bessel3:
      case ScenarioKind::vanishing_martingale: return "x=" + num(x) + ", y=" + num(y);
      default: return "";
    }
  }
};

/// One row of the coverage matrix: a test name and the result it exercises.
struct Claim {
  std::string test;
  std::string reference;
};

inline std::vector<Claim> scenario_claims(ScenarioKind k) {
  const Claim uniform{"uniform_x_rho", "pivot law: X_rho ~ Uniform(0,1)"};
  const Claim sigma{"sigma_class", "class (Sigma): dA carried by {X = 0}"};
  const Claim skorokhod{"skorokhod_identity", "Skorokhod reflection: A_t = sup_{u<=t}(-N_u)"};
  const Claim flat{"flatness_after_L", "flatness: A does not increase after L"};
  switch (k) {
    case ScenarioKind::williams_brownian:
      return {uniform,
              {"post_L_bessel3_durations", "post-L fragment: BES(3) from 0 run to 1"},
              {"post_L_drift", "post-L fragment: drift 1/x"},
              {"independence_x_rho_post_L", "post-L fragment independent of F_L"},
              sigma, flat, skorokhod};
    case ScenarioKind::abs_brownian:
    case ScenarioKind::skew_weighted:
      return {uniform,
              {"optional_stopping_linear", "pseudo-stopping time: E M_rho = M_0"},
              {"optional_stopping_exp", "pseudo-stopping time: E M_rho = M_0"},
              {"negative_control_honest_time", "honest time L is not pseudo-stopping"},
              {"compensator_identity", "dual projection: log(1/Z^rho) compensates 1{rho <= t}"},
              {"pre_rho_reflected_bm", "pre-rho fragment: reflected BM stopped at m"},
              {"post_L_bessel3_durations", "post-L fragment: BES(3) from 0 run to 1"},
              {"post_L_drift", "post-L fragment: drift 1/x"},
              {"independence_x_rho_post_L", "post-L fragment independent of F_L"},
              sigma, flat, skorokhod};
    case ScenarioKind::recurrent_diffusion:
      return {uniform,
              {"law_transform_state_rho", "pivot law: Y_rho ~ s^-1(s(1) U)"},
              {"post_L_drift", "post-sigma generator: drift b + s'/s"},
              {"middle_drift_strata", "middle fragment generator: drift b + 1{x>0} s'/(s - s(m))"},
              {"pre_rho_drift", "pre-rho fragment: generator of Y"},
              {"independence_state_rho_post_L", "Y_rho independent of the post-sigma process"}};
    case ScenarioKind::transient_bessel3:
      return {{"last_passage_survival", "last passage: P(g_y > t | F_t) = s(R_t)/s(y) ^ 1"},
              uniform,
              {"law_transform_state_rho", "pivot law: R_rho ~ s^-1(s(y) U)"},
              {"post_L_drift", "post-g generator: drift c + s'/(s - s(y))"},
              {"independence_state_rho_post_L", "R_rho independent of the post-g process"}};
    case ScenarioKind::vanishing_martingale:
      return {{"last_passage_survival", "last passage: P(g > t | F_t) = M_t / y ^ 1"},
              uniform,
              {"law_transform_state_rho", "pivot law: M_rho ~ y U"}};
  }
  return {};
}

}  // namespace azema
