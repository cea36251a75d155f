// Result persistence: reports, sample tables, plot data and the run manifest.
#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "azema/experiments/run.hpp"
#include "azema/io/config.hpp"
#include "azema/io/json_text.hpp"
#include "azema/io/sha256.hpp"

#ifndef AZEMA_VERSION
#define AZEMA_VERSION "unknown"
#endif

namespace azema::io {

namespace fs = std::filesystem;

inline constexpr const char* kManifestName = "manifest.json";

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json report_to_json(const TestReport& r) {
  json j;
  j["name"] = r.name;
  j["verdict"] = r.skipped ? "skipped" : (r.pass ? "pass" : "fail");
  j["statistic"] = r.statistic;
  j["p_value_or_bound"] = r.p_value_or_bound;
  j["tolerance_used"] = r.tolerance_used;
  j["n_samples"] = r.n_samples;
  j["seed"] = r.seed;
  j["claim"] = r.claim;
  j["notes"] = r.notes;
  return j;
}

inline json claims_to_json(const std::vector<Claim>& claims) {
  json a = json::array();
  for (const auto& c : claims) a.push_back(json{{"test", c.test}, {"claim", c.reference}});
  return a;
}

/// Deterministic part of a result (no timestamps or timings).
inline json result_to_json(const ExperimentResult& r) {
  json j;
  j["scenario"] = scenario_to_json(r.config.scenario);
  j["n_paths"] = r.n_paths;
  j["n_censored"] = r.n_censored;
  j["n_excluded"] = r.n_excluded;
  j["censoring_fraction"] = r.censoring_fraction;
  json reps = json::array();
  for (const auto& t : r.reports) reps.push_back(report_to_json(t));
  j["reports"] = reps;
  json drift = json::array();
  for (const auto& d : r.drift_profiles) {
    const auto within = std::count(d.profile.within.begin(), d.profile.within.end(), true);
    drift.push_back(json{{"name", d.name},
                         {"occupied_bins", d.profile.size()},
                         {"bins_within_tolerance", within}});
  }
  j["drift_profiles"] = drift;
  j["coverage"] = claims_to_json(scenario_claims(r.config.scenario.kind));
  j["diagnostics"] = r.diagnostics;
  return j;
}

class FileSet {
 public:
  explicit FileSet(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    const auto p = dir_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot write '" + p.string() + "'");
    out << content;
    out.close();
    if (!out) throw OutputError("write failed for '" + p.string() + "'");
    inventory_.push_back(json{{"name", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
  }

  const json& inventory() const { return inventory_; }

 private:
  fs::path dir_;
  json inventory_ = json::array();
};

inline std::string samples_csv(const ExperimentResult& r) {
  std::string s = "path_index,quantity,value\n";
  for (const auto& row : r.samples) {
    s += std::to_string(row.path_index) + "," + row.quantity + "," + format_double(row.value) + "\n";
  }
  return s;
}

/// Empirical CDF of X_rho: one row per sample, (x_rho, ecdf). The uniform
/// reference is the identity on the first column.
inline std::string ecdf_csv(const ExperimentResult& r) {
  std::string s = "x_rho,ecdf\n";
  const auto n = static_cast<double>(r.x_rho_sorted.size());
  for (std::size_t i = 0; i < r.x_rho_sorted.size(); ++i) {
    s += format_double(r.x_rho_sorted[i]) + "," + format_double(static_cast<double>(i + 1) / n) + "\n";
  }
  return s;
}

inline std::string drift_csv(const DriftProfile& p) {
  std::string s = "bin_center,estimate,se,target\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += format_double(p.bin_centers[i]) + "," + format_double(p.estimated_drift[i]) + "," +
         format_double(p.standard_errors[i]) + "," + format_double(p.target_drift[i]) + "\n";
  }
  return s;
}

inline std::string qq_csv(const QQTable& q) {
  std::string s = "sample_quantile,oracle_quantile\n";
  for (const auto& [a, b] : q.pairs) s += format_double(a) + "," + format_double(b) + "\n";
  return s;
}

struct RunTimes {
  std::chrono::system_clock::time_point started;
  std::chrono::system_clock::time_point finished;
};

/// Writes every artifact of `result` into `dir` and returns the manifest,
/// which is itself written last as manifest.json.
inline json write_results(const ExperimentResult& result, const RunConfig& config,
                          const fs::path& dir, const RunTimes& times, int exit_code) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw OutputError("cannot create output directory '" + dir.string() + "'");
  }
  FileSet files(dir);
  files.write("reports.json", to_text(result_to_json(result)));
  files.write("samples.csv", samples_csv(result));
  files.write("ecdf_x_rho.csv", ecdf_csv(result));
  for (const auto& d : result.drift_profiles) files.write("drift_" + d.name + ".csv", drift_csv(d.profile));
  for (const auto& q : result.qq_tables) files.write("qq_" + q.name + ".csv", qq_csv(q));

  json m;
  m["tool"] = "azema";
  m["version"] = AZEMA_VERSION;
  m["started_at"] = utc_timestamp(times.started);
  m["finished_at"] = utc_timestamp(times.finished);
  m["wall_time_seconds"] = result.wall_time_seconds;
  m["config"] = to_json(config);
  json summary;
  json pass = json::array(), fail = json::array(), skip = json::array();
  for (const auto& r : result.reports) (r.skipped ? skip : r.pass ? pass : fail).push_back(r.name);
  summary["passed"] = pass;
  summary["failed"] = fail;
  summary["skipped"] = skip;
  summary["censoring_fraction"] = result.censoring_fraction;
  m["summary"] = summary;
  m["exit_code"] = exit_code;
  m["files"] = files.inventory();
  const auto p = dir / kManifestName;
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot write '" + p.string() + "'");
  out << to_text(m);
  return m;
}

struct ManifestCheck {
  json manifest;
  std::vector<std::string> problems;  // missing files and checksum mismatches
  bool intact() const { return problems.empty(); }
};

/// Reads a manifest and re-hashes every file it lists (paths relative to the
/// manifest's directory).
inline ManifestCheck verify_manifest(const fs::path& manifest_path) {
  ManifestCheck c;
  try {
    c.manifest = json::parse(read_file(manifest_path.string()));
  } catch (const json::parse_error& e) {
    throw OutputError("manifest is not valid JSON: " + std::string(e.what()));
  } catch (const std::runtime_error& e) {
    throw OutputError(e.what());
  }
  if (!c.manifest.is_object() || !c.manifest.contains("files") || !c.manifest["files"].is_array()) {
    throw OutputError("manifest has no file inventory");
  }
  const auto dir = manifest_path.parent_path();
  for (const auto& f : c.manifest["files"]) {
    const auto name = f.at("name").get<std::string>();
    const auto p = dir / name;
    if (!fs::exists(p)) {
      c.problems.push_back("missing file " + name);
      continue;
    }
    if (file_sha256(p.string()) != f.at("sha256").get<std::string>()) {
      c.problems.push_back("checksum mismatch for " + name);
    }
  }
  return c;
}

}  // namespace azema::io
