// Command implementations behind the azema executable. Each returns the
// process exit code.
#pragma once

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "azema/core/paths.hpp"
#include "azema/experiments/run.hpp"
#include "azema/io/config.hpp"
#include "azema/io/results.hpp"

namespace azema::io {

enum ExitCode : int { kExitOk = 0, kExitTestFailure = 1, kExitConfigError = 2, kExitAbort = 3 };

inline constexpr const char* kOutputDirEnv = "AZEMA_OUTPUT_DIR";

/// 0 when every evaluated test passes; 1 on any failure or when no test could
/// be evaluated at all.
inline int verdict_exit_code(const std::vector<TestReport>& reports) {
  std::size_t evaluated = 0;
  for (const auto& r : reports) {
    if (r.skipped) continue;
    ++evaluated;
    if (!r.pass) return kExitTestFailure;
  }
  return evaluated == 0 ? kExitTestFailure : kExitOk;
}

inline void print_report_line(std::ostream& out, const std::string& verdict, const std::string& name,
                              const std::string& detail) {
  out << std::left << std::setw(5) << verdict << " " << std::setw(34) << name << " " << detail << "\n";
}

inline int cmd_run(const std::string& config_path, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    cfg.output_dir = env;
  }
  RunTimes times;
  times.started = std::chrono::system_clock::now();
  ExperimentResult result;
  try {
    result = run_scenario(cfg.experiment);
  } catch (const ExperimentAbort& e) {
    err << "run aborted: " << e.what() << "\n";
    return kExitAbort;
  } catch (const PathError& e) {
    err << "run aborted: path pathology: " << e.what() << "\n";
    return kExitAbort;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  times.finished = std::chrono::system_clock::now();
  const int code = verdict_exit_code(result.reports);
  try {
    write_results(result, cfg, cfg.output_dir, times, code);
  } catch (const OutputError& e) {
    err << "output error: " << e.what() << "\n";
    return kExitConfigError;
  }
  out << cfg.experiment.scenario.name() << ": " << result.n_paths << " paths, "
      << result.n_censored << " censored, " << result.n_excluded << " excluded, "
      << std::setprecision(3) << result.wall_time_seconds << " s\n";
  for (const auto& r : result.reports) {
    std::ostringstream d;
    d << std::setprecision(6) << "stat=" << r.statistic << " bound=" << r.p_value_or_bound
      << " n=" << r.n_samples;
    if (r.skipped) d << "  " << r.notes;
    print_report_line(out, r.skipped ? "SKIP" : r.pass ? "PASS" : "FAIL", r.name, d.str());
  }
  out << "results written to " << cfg.output_dir << "\n";
  return code;
}

inline json scenario_listing() {
  json a = json::array();
  for (auto k : kAllScenarios) {
    Scenario s;
    s.kind = k;
    if (k == ScenarioKind::skew_weighted) {
      s.alpha = 2.0;
      s.beta = 0.5;
    }
    json j;
    j["name"] = s.name();
    auto params = scenario_to_json(s);
    params.erase("name");
    j["parameters"] = params;
    j["default_horizon"] = s.default_horizon();
    j["claims"] = claims_to_json(scenario_claims(k));
    a.push_back(j);
  }
  return a;
}

inline int cmd_list_scenarios(bool machine, std::ostream& out) {
  const auto listing = scenario_listing();
  if (machine) {
    out << to_text(listing);
    return kExitOk;
  }
  for (const auto& s : listing) {
    out << s["name"].get<std::string>() << "\n";
    out << "  parameters: ";
    if (s["parameters"].empty()) out << "none";
    bool first = true;
    for (auto it = s["parameters"].begin(); it != s["parameters"].end(); ++it) {
      out << (first ? "" : ", ") << it.key() << " (default " << to_text(it.value(), 0) << ")";
      first = false;
    }
    out << "\n  default horizon: " << s["default_horizon"].get<double>() << "\n  claims:\n";
    for (const auto& c : s["claims"]) {
      out << "    " << std::left << std::setw(32) << c["test"].get<std::string>() << " "
          << c["claim"].get<std::string>() << "\n";
    }
  }
  return kExitOk;
}

inline int cmd_report(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  ManifestCheck check;
  try {
    check = verify_manifest(manifest_path);
  } catch (const OutputError& e) {
    err << "manifest error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const auto& m = check.manifest;
  const auto& cfg = m.at("config");
  out << "run of " << cfg.at("scenario").at("name").get<std::string>() << " ("
      << cfg.at("n_paths").get<std::uint64_t>() << " paths, seed "
      << cfg.at("master_seed").get<std::uint64_t>() << ") " << m.at("started_at").get<std::string>()
      << " .. " << m.at("finished_at").get<std::string>() << "\n";
  const auto& summary = m.at("summary");
  std::size_t evaluated = 0;
  bool failed = false;
  for (const char* group : {"passed", "failed", "skipped"}) {
    for (const auto& name : summary.at(group)) {
      const std::string g = group;
      print_report_line(out, g == "passed" ? "PASS" : g == "failed" ? "FAIL" : "SKIP",
                        name.get<std::string>(), "");
      if (g != "skipped") ++evaluated;
      failed = failed || g == "failed";
    }
  }
  if (!check.intact()) {
    for (const auto& p : check.problems) err << "integrity: " << p << "\n";
    return kExitConfigError;
  }
  out << m.at("files").size() << " files verified\n";
  return failed || evaluated == 0 ? kExitTestFailure : kExitOk;
}

/// Entry point shared by the executable and the tests.
inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo checks of pseudo-stopping times and path decompositions", "azema"};
  app.set_version_flag("--version", std::string(AZEMA_VERSION));
  app.require_subcommand(1);
  std::string config_path, manifest_path;
  bool machine = false;
  auto* run = app.add_subcommand("run", "simulate a scenario and evaluate its test battery");
  run->add_option("config", config_path, "JSON run configuration")->required();
  auto* list = app.add_subcommand("list-scenarios", "list scenarios and the claims they test");
  list->add_flag("--machine", machine, "JSON output");
  auto* report = app.add_subcommand("report", "summarize a run and verify its checksums");
  report->add_option("manifest", manifest_path, "manifest.json of a run")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << AZEMA_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kExitConfigError;
  }
  if (*run) return cmd_run(config_path, out, err);
  if (*list) return cmd_list_scenarios(machine, out);
  return cmd_report(manifest_path, out, err);
}

}  // namespace azema::io
