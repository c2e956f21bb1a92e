#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fbra/runner.hpp"

using namespace fbra;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("fbra_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path path = dir / "scenario.cfg";
  std::ofstream out(path);
  out << body;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cmd_run writes the three output files") {
  const auto dir = temp_dir("run");
  const auto cfg = write_config(
      dir, "topology = single_var_link\nbottleneck_delay_ms = 50\nduration_s = 10\n");

  RunOptions options;
  options.scenario_path = cfg.string();
  options.seed = 1;
  options.out_dir = (dir / "out").string();
  CHECK(cmd_run(options) == kExitOk);
  CHECK(fs::exists(dir / "out" / "trace.csv"));
  CHECK(fs::exists(dir / "out" / "summary.json"));
  CHECK(fs::exists(dir / "out" / "timeseries.csv"));
}

TEST_CASE("missing topology key fails with the config exit status") {
  const auto dir = temp_dir("badcfg");
  const auto cfg = write_config(dir, "bottleneck_delay_ms = 50\n");
  RunOptions options;
  options.scenario_path = cfg.string();
  options.out_dir = (dir / "out").string();
  CHECK(cmd_run(options) == kExitConfigError);

  RunOptions missing;
  missing.scenario_path = (dir / "nope.cfg").string();
  missing.out_dir = (dir / "out").string();
  CHECK(cmd_run(missing) == kExitConfigError);
}

TEST_CASE("identical config and seed write byte-identical outputs") {
  const auto dir = temp_dir("determinism");
  const auto cfg = write_config(
      dir, "topology = rtp_vs_tcp\nbottleneck_delay_ms = 50\nduration_s = 15\ntcp_flows = 2\n");

  for (const char* sub : {"a", "b"}) {
    RunOptions options;
    options.scenario_path = cfg.string();
    options.seed = 7;
    options.out_dir = (dir / sub).string();
    REQUIRE(cmd_run(options) == kExitOk);
  }
  CHECK(slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv"));
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));
  CHECK(slurp(dir / "a" / "timeseries.csv") == slurp(dir / "b" / "timeseries.csv"));
}

TEST_CASE("sweep writes per-seed outputs and an aggregate") {
  const auto dir = temp_dir("sweep");
  const auto cfg = write_config(
      dir, "topology = single_var_link\nbottleneck_delay_ms = 50\nduration_s = 8\n");

  SweepOptions options;
  options.scenario_path = cfg.string();
  options.seeds = 3;
  options.out_dir = (dir / "out").string();
  CHECK(cmd_sweep(options) == kExitOk);
  for (int k = 1; k <= 3; ++k) {
    CHECK(fs::exists(dir / "out" / ("seed_" + std::to_string(k)) / "trace.csv"));
  }
  const std::string agg = slurp(dir / "out" / "aggregate.json");
  CHECK(agg.find("\"rtp0.goodput_kbps\"") != std::string::npos);
  CHECK(agg.find("\"mean\"") != std::string::npos);
  CHECK(agg.find("\"stddev\"") != std::string::npos);
}

TEST_CASE("a failing seed keeps the other results and turns the exit nonzero") {
  const auto dir = temp_dir("sweepfail");
  const auto cfg = write_config(
      dir, "topology = single_var_link\nbottleneck_delay_ms = 50\nduration_s = 5\n");

  // a plain file squatting on seed_2's directory makes only that seed fail
  fs::create_directories(dir / "out");
  std::ofstream(dir / "out" / "seed_2") << "in the way";

  SweepOptions options;
  options.scenario_path = cfg.string();
  options.seeds = 3;
  options.out_dir = (dir / "out").string();
  CHECK(cmd_sweep(options) == kExitRuntimeError);
  CHECK(fs::exists(dir / "out" / "seed_1" / "trace.csv"));
  CHECK(fs::exists(dir / "out" / "seed_3" / "trace.csv"));
  const std::string agg = slurp(dir / "out" / "aggregate.json");
  CHECK(agg.find("\"failed_seeds\": [\n    2\n  ]") != std::string::npos);
  CHECK(agg.find("\"completed\": 2") != std::string::npos);
}

TEST_CASE("single-seed sweep has zero deviation") {
  const auto dir = temp_dir("sweep1");
  const auto cfg = write_config(
      dir, "topology = single_var_link\nbottleneck_delay_ms = 50\nduration_s = 8\n");
  SweepOptions options;
  options.scenario_path = cfg.string();
  options.seeds = 1;
  options.out_dir = (dir / "out").string();
  CHECK(cmd_sweep(options) == kExitOk);
  const std::string agg = slurp(dir / "out" / "aggregate.json");
  CHECK(agg.find("\"stddev\": 0.0") != std::string::npos);
}

#ifdef FBRA_SIM_BINARY
TEST_CASE("the installed binary handles flags and exit codes") {
  const auto dir = temp_dir("exec");
  const auto cfg = write_config(
      dir, "topology = single_var_link\nbottleneck_delay_ms = 50\nduration_s = 5\n");

  const std::string base = std::string(FBRA_SIM_BINARY);
  std::string cmd = base + " run --scenario " + cfg.string() + " --seed 2 --out " +
                    (dir / "out").string() + " >/dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "out" / "trace.csv"));

  cmd = base + " run --scenario " + (dir / "missing.cfg").string() + " --out " +
        (dir / "out2").string() + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == kExitConfigError);

  // duration override shortens the run
  cmd = base + " run --scenario " + cfg.string() + " --duration 1 --out " +
        (dir / "out3").string() + " >/dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  const std::string trace = slurp(dir / "out3" / "trace.csv");
  CHECK(trace.find("#duration_us=1000000") != std::string::npos);
}
#endif
