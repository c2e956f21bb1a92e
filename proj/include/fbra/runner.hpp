#pragma once

#include <optional>
#include <string>

#include "fbra/scenario.hpp"
#include "fbra/trace.hpp"

namespace fbra {

struct RunOptions {
  std::string scenario_path;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::optional<double> duration_override_s;
  std::optional<int> fec_interval_min;
  std::optional<int> fec_interval_max;
};

struct SweepOptions {
  std::string scenario_path;
  int seeds = 1;  // runs seeds 1..N
  std::string out_dir;
  std::optional<double> duration_override_s;
  std::optional<int> fec_interval_min;
  std::optional<int> fec_interval_max;
};

// Exit statuses shared by the library entry points and the CLI.
constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;

Scenario load_scenario(const RunOptions& options);

// Executes one simulation and writes trace.csv, summary.json and
// timeseries.csv into the output directory.
int cmd_run(const RunOptions& options);

// Runs seeds 1..N into seed_<k>/ subdirectories plus aggregate.json with
// mean and standard deviation per metric. A failing seed leaves the other
// results in place and turns the exit status nonzero.
int cmd_sweep(const SweepOptions& options);

// Pieces reused by tests and the acceptance suite.
void write_run_outputs(const SimTrace& trace, const Scenario& scenario,
                       const std::string& out_dir);
std::string summary_json_text(const SimTrace& trace, const Scenario& scenario);
void write_timeseries_csv(const SimTrace& trace, const std::string& path);

// Long-form metric table: flow,metric,value rows per flow plus the
// flow-fairness row when TCP traffic is present.
void write_metrics_csv(const SimTrace& trace, const Scenario& scenario,
                       const std::string& path);

}  // namespace fbra
