// Run configuration: strict JSON schema, parsing and serialization.
//
// {
//   "scenario": {"name": "...", scenario-specific keys},
//   "n_paths": 5000, "step_h": 0.001, "master_seed": 7,          required
//   "horizon": 20.0, "alpha": 0.01, "threads": 0,                optional
//   "uncensored_target": 5000,                                   optional
//   "tolerances": {"rel_tol": 0.15, "zero_band": 0.06, "epsilon": 0.03},
//   "output_dir": "out/abs"
// }
//
// Scenario keys: skew_weighted takes alpha and beta; recurrent_diffusion takes
// drift {family, parameter}; transient_bessel3 and vanishing_martingale take
// x and y. Any other key is rejected with its path named.
#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "azema/experiments/run.hpp"
#include "azema/io/json_text.hpp"

namespace azema::io {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ExperimentConfig experiment;
  std::string output_dir = "azema_out";

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline void allow_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> keys) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) {
      throw ConfigError("unknown config key '" + where + it.key() + "'");
    }
  }
}

inline const json& object_at(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_object()) throw ConfigError(where + key + ": expected an object");
  return v;
}

inline double number(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + key + ": expected a number");
  return v.get<double>();
}

inline std::uint64_t unsigned_int(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) {
    throw ConfigError(where + key + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline std::string text(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + key + ": expected a string");
  return v.get<std::string>();
}

inline void require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing config key '" + where + key + "'");
}

inline Scenario parse_scenario(const json& j) {
  const std::string w = "scenario.";
  require(j, "name", w);
  Scenario s;
  try {
    s.kind = scenario_kind_from_string(text(j, "name", w));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario.name: ") + e.what());
  }
  switch (s.kind) {
    case ScenarioKind::skew_weighted:
      allow_keys(j, w, {"name", "alpha", "beta"});
      if (j.contains("alpha")) s.alpha = number(j, "alpha", w);
      if (j.contains("beta")) s.beta = number(j, "beta", w);
      break;
    case ScenarioKind::recurrent_diffusion:
      allow_keys(j, w, {"name", "drift"});
      if (j.contains("drift")) {
        const auto& d = object_at(j, "drift", w);
        allow_keys(d, w + "drift.", {"family", "parameter"});
        if (d.contains("family")) s.drift.family = text(d, "family", w + "drift.");
        if (d.contains("parameter")) s.drift.parameter = number(d, "parameter", w + "drift.");
      }
      break;
    case ScenarioKind::transient_bessel3:
    case ScenarioKind::vanishing_martingale:
      allow_keys(j, w, {"name", "x", "y"});
      if (j.contains("x")) s.x = number(j, "x", w);
      if (j.contains("y")) s.y = number(j, "y", w);
      break;
    default: allow_keys(j, w, {"name"}); break;
  }
  return s;
}

}  // namespace detail

/// Parses and validates a config document. Throws ConfigError naming the
/// offending key or field.
inline RunConfig parse_config(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  allow_keys(j, "", {"scenario", "n_paths", "step_h", "master_seed", "horizon", "alpha", "threads",
                     "uncensored_target", "tolerances", "output_dir"});
  for (const char* k : {"scenario", "n_paths", "step_h", "master_seed"}) require(j, k, "");
  RunConfig c;
  auto& e = c.experiment;
  e.scenario = parse_scenario(object_at(j, "scenario", ""));
  e.n_paths = unsigned_int(j, "n_paths", "");
  e.step_h = number(j, "step_h", "");
  e.master_seed = unsigned_int(j, "master_seed", "");
  if (j.contains("horizon")) e.horizon = number(j, "horizon", "");
  if (j.contains("alpha")) e.alpha = number(j, "alpha", "");
  if (j.contains("threads")) e.threads = unsigned_int(j, "threads", "");
  if (j.contains("uncensored_target")) e.uncensored_target = unsigned_int(j, "uncensored_target", "");
  if (j.contains("tolerances")) {
    const auto& t = object_at(j, "tolerances", "");
    allow_keys(t, "tolerances.", {"rel_tol", "zero_band", "epsilon"});
    if (t.contains("rel_tol")) e.rel_tol = number(t, "rel_tol", "tolerances.");
    if (t.contains("zero_band")) e.zero_band = number(t, "zero_band", "tolerances.");
    if (t.contains("epsilon")) e.epsilon = number(t, "epsilon", "tolerances.");
  }
  if (j.contains("output_dir")) c.output_dir = text(j, "output_dir", "");
  if (c.output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  try {
    e.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name();
  switch (s.kind) {
    case ScenarioKind::skew_weighted:
      j["alpha"] = s.alpha;
      j["beta"] = s.beta;
      break;
    case ScenarioKind::recurrent_diffusion:
      j["drift"] = json{{"family", s.drift.family}, {"parameter", s.drift.parameter}};
      break;
    case ScenarioKind::transient_bessel3:
    case ScenarioKind::vanishing_martingale:
      j["x"] = s.x;
      j["y"] = s.y;
      break;
    default: break;
  }
  return j;
}

/// Only fields that were set are emitted, so parse(to_json(c)) == c.
inline json to_json(const RunConfig& c) {
  const auto& e = c.experiment;
  json j;
  j["scenario"] = scenario_to_json(e.scenario);
  j["n_paths"] = e.n_paths;
  j["step_h"] = e.step_h;
  j["master_seed"] = e.master_seed;
  if (e.horizon) j["horizon"] = *e.horizon;
  j["alpha"] = e.alpha;
  j["threads"] = e.threads;
  if (e.uncensored_target) j["uncensored_target"] = *e.uncensored_target;
  json t;
  t["rel_tol"] = e.rel_tol;
  if (e.zero_band) t["zero_band"] = *e.zero_band;
  if (e.epsilon) t["epsilon"] = *e.epsilon;
  j["tolerances"] = t;
  j["output_dir"] = c.output_dir;
  return j;
}

inline std::string serialize_config(const RunConfig& c) { return to_text(to_json(c)); }

}  // namespace azema::io
