#pragma once

#include "singarc/benchmarks.hpp"
#include "singarc/simulator.hpp"

#include <string>
#include <vector>

namespace singarc {

/// Command-line harness: reproducible experiment runs wired from a JSON
/// config file and/or flags (flags win). Commands: solve (transcribe +
/// solve + open-loop simulation), empc (closed-loop run), table1 (the
/// full method comparison on the double-integrator problem), report
/// (re-render a previously emitted metrics file).
///
/// Exit codes: 0 success with optimal solves, 1 usage/config error,
/// 2 solver non-optimal or run failure.
namespace cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string problem;            // second-order | aly-chan | smib (required for solve/empc)
  std::string method = "dc";      // dc | irrdc
  int mesh_Z = 100;
  std::string empc_mode = "auto"; // auto | receding | shrinking
  sim::EmpcConfig empc;           // step / horizon / warm_start / failure policy / duration
  SolverOptions solver;
  IrrConfig irr;
  SmibParams smib;
  std::string output_dir = ".";
  std::vector<std::string> formats = {"csv", "json"};
  std::string sweep_initial;      // "" or "phase-grid"
  std::string report_input;       // metrics json consumed by cmd_report

  void validate() const;          // value checks; throws ConfigError
  std::string to_json() const;    // effective-config snapshot for artifacts
};

/// Strict parse of a config file: unknown keys anywhere are rejected.
/// Values overwrite the corresponding fields of `base`.
RunConfig load_config_file(const std::string& path, RunConfig base = {});

/// Benchmark lookup by RunConfig::problem (smib honors cfg.smib).
OcpDefinition make_problem(const RunConfig& cfg);

int cmd_solve(const RunConfig& cfg);
int cmd_empc(const RunConfig& cfg);
int cmd_table1(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);

/// Full entry point: parses argv, merges SINGARC_OUTPUT_DIR, the config
/// file and flags (in that precedence order), dispatches, maps errors to
/// exit codes. Never throws.
int run_cli(int argc, const char* const* argv);

}  // namespace cli
}  // namespace singarc
