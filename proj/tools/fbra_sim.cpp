#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fbra/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"FBRA congestion-control simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  int seeds = 1;
  std::optional<double> duration_s;
  std::optional<int> fec_min;
  std::optional<int> fec_max;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario_path, "scenario config file")->required();
    cmd->add_option("--out", out_dir, "output directory")->required();
    cmd->add_option("--duration", duration_s, "override duration (seconds)");
    cmd->add_option("--fec-interval-min", fec_min, "lower bound for the FEC interval");
    cmd->add_option("--fec-interval-max", fec_max, "upper bound for the FEC interval");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run one simulation");
  add_common(run_cmd);
  run_cmd->add_option("--seed", seed, "RNG seed");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run seeds 1..N and aggregate");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fbra::kExitConfigError;
  }

  if (run_cmd->parsed()) {
    fbra::RunOptions options;
    options.scenario_path = scenario_path;
    options.seed = seed;
    options.out_dir = out_dir;
    options.duration_override_s = duration_s;
    options.fec_interval_min = fec_min;
    options.fec_interval_max = fec_max;
    return fbra::cmd_run(options);
  }

  fbra::SweepOptions options;
  options.scenario_path = scenario_path;
  options.seeds = seeds;
  options.out_dir = out_dir;
  options.duration_override_s = duration_s;
  options.fec_interval_min = fec_min;
  options.fec_interval_max = fec_max;
  return fbra::cmd_sweep(options);
}
