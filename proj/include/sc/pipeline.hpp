#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sc/config.hpp"
#include "sc/inner.hpp"

namespace sc::pipeline {

enum class Stage { Feasibility, Outer, Inner, Composite, Stability, Evolve1d };
const char* to_string(Stage s);

/// Stages run by a CLI subcommand; `all` is the PDE chain plus stability. Throws Config on unknown names.
std::vector<Stage> stages_for(const std::string& subcommand);

struct RunOptions {
  std::filesystem::path out;  ///< empty: the config output directory
  bool override_feasibility = false;
  int jobs = 1;
  std::optional<inner::InnerParams> single_station;  ///< inner stage solves only this station
};

struct StageRecord {
  std::string name;
  std::string status;  ///< ok, infeasible, overridden, failed, skipped
  std::string error;   ///< ErrorKind name when failed
  std::string message;
  double seconds = 0;
};

struct RunResult {
  int exit_code = 0;  ///< 0 ok, 2 infeasible, 3 solver failure, 4 config error
  std::vector<StageRecord> stages;
  std::map<std::string, double> scalars;  ///< headline numbers keyed by name
  std::vector<std::string> artifacts;     ///< paths relative to the output directory, in write order
};

int exit_code(ErrorKind k);

/// Runs the stages in the given order, stopping at the first failure. Always writes manifest.json
/// (hashed artifacts, config echo, status) and timings.json (wall clock, not hashed).
RunResult run(const config::RunConfig& c, const std::vector<Stage>& stages, const RunOptions& opt = {});

/// One independent run per value of c.sweep.axis in out/<axis>_<index>, then sweep.csv with a row per value.
/// Beta sweeps run stability only; other axes run the PDE chain. Failures are recorded per row.
RunResult sweep(const config::RunConfig& c, const RunOptions& opt = {});

}  // namespace sc::pipeline
