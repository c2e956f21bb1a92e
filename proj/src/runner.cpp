#include "fbra/runner.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include <json.hpp>

#include "fbra/errors.hpp"
#include "fbra/log.hpp"
#include "fbra/metrics.hpp"

namespace fbra {

namespace fs = std::filesystem;
using nlohmann::json;

Scenario load_scenario(const RunOptions& options) {
  Scenario sc = parse_scenario_file(options.scenario_path);
  sc.seed = options.seed;
  if (options.duration_override_s.has_value()) {
    sc.duration = static_cast<Duration>(*options.duration_override_s * kSecond);
  }
  if (options.fec_interval_min.has_value()) sc.fec_interval_min = *options.fec_interval_min;
  if (options.fec_interval_max.has_value()) sc.fec_interval_max = *options.fec_interval_max;
  validate(sc);
  return sc;
}

namespace {

json summary_json(const SimTrace& trace, const Scenario& scenario) {
  json out;
  out["schema"] = "fbra-summary-v1";
  out["scenario"] = {
      {"topology", to_string(scenario.topology)},
      {"bottleneck_delay_ms", scenario.bottleneck_delay / kMillisecond},
      {"duration_s", to_seconds(scenario.duration)},
      {"seed", scenario.seed},
      {"rtp_flows", scenario.rtp_flows},
      {"tcp_flows", scenario.tcp_flows},
      {"mean_capacity_bps", scenario.mean_capacity().bps},
  };

  json flows = json::array();
  for (const auto& name : rtp_flows_in(trace)) {
    const FlowSummary s = flow_summary(trace, name, scenario.mean_capacity());
    json f;
    f["flow"] = s.flow;
    f["goodput_kbps"] = static_cast<double>(s.goodput.bps) / 1000.0;
    f["loss_rate"] = s.loss_rate;
    f["lost_frames"] = s.lost_frames;
    f["fec_rate_kbps"] = static_cast<double>(s.fec_rate.bps) / 1000.0;
    f["frcc"] = s.frcc.has_value() ? json(*s.frcc) : json(nullptr);
    f["ffre"] = s.ffre.has_value() ? json(*s.ffre) : json(nullptr);
    f["abu"] = s.abu.has_value() ? json(*s.abu) : json(nullptr);
    f["packets_sent"] = s.packets_sent;
    f["packets_lost"] = s.packets_lost;
    f["packets_recovered"] = s.packets_recovered;
    f["packets_discarded"] = s.packets_discarded;
    flows.push_back(std::move(f));
  }
  for (const auto& name : tcp_flows_in(trace)) {
    std::int64_t bits = 0;
    for (const auto& e : trace.events) {
      if (e.flow == name && e.kind == TraceEventKind::Recv) bits += e.size_bytes * 8;
    }
    json f;
    f["flow"] = name;
    f["throughput_kbps"] =
        static_cast<double>(bits) / 1000.0 / to_seconds(std::max<Duration>(trace.duration, 1));
    flows.push_back(std::move(f));
  }
  out["flows"] = std::move(flows);

  if (!tcp_flows_in(trace).empty()) {
    out["tfs"] = tfs(trace);
  }
  return out;
}

}  // namespace

std::string summary_json_text(const SimTrace& trace, const Scenario& scenario) {
  return summary_json(trace, scenario).dump(2) + "\n";
}

void write_timeseries_csv(const SimTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open timeseries file for writing: " + path);
  out << "#fbra-timeseries-v1\n";
  out << "time_s,flow,send_rate_bps,fec_rate_bps,goodput_bps,mean_owd_us\n";

  const auto flows = rtp_flows_in(trace);
  const std::int64_t buckets = (trace.duration + kSecond - 1) / kSecond;

  struct Bucket {
    std::int64_t sent_bits = 0;
    std::int64_t fec_bits = 0;
    std::int64_t good_bits = 0;
    std::int64_t owd_sum = 0;
    std::int64_t owd_count = 0;
  };

  for (const auto& flow : flows) {
    std::vector<Bucket> series(static_cast<std::size_t>(std::max<std::int64_t>(buckets, 0)));
    for (const auto& e : trace.events) {
      if (e.flow != flow) continue;
      const std::int64_t b = e.at.us / kSecond;
      if (b < 0 || b >= buckets) continue;
      auto& bucket = series[static_cast<std::size_t>(b)];
      switch (e.kind) {
        case TraceEventKind::SendRtp:
          bucket.sent_bits += e.size_bytes * 8;
          break;
        case TraceEventKind::SendFec:
          bucket.fec_bits += e.size_bytes * 8;
          break;
        case TraceEventKind::Recv:
          bucket.good_bits += e.size_bytes * 8;
          bucket.owd_sum += std::stoll(e.extra);
          ++bucket.owd_count;
          break;
        case TraceEventKind::Discard:
          bucket.good_bits -= e.size_bytes * 8;
          break;
        case TraceEventKind::Recovered:
          bucket.good_bits += e.size_bytes * 8;
          break;
        default:
          break;
      }
    }
    for (std::int64_t b = 0; b < buckets; ++b) {
      const auto& bucket = series[static_cast<std::size_t>(b)];
      out << b << ',' << flow << ',' << bucket.sent_bits << ',' << bucket.fec_bits << ','
          << std::max<std::int64_t>(bucket.good_bits, 0) << ','
          << (bucket.owd_count > 0 ? bucket.owd_sum / bucket.owd_count : 0) << '\n';
    }
  }
}

void write_run_outputs(const SimTrace& trace, const Scenario& scenario,
                       const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_trace_csv(trace, (fs::path(out_dir) / "trace.csv").string());
  std::ofstream summary(fs::path(out_dir) / "summary.json", std::ios::trunc);
  if (!summary) throw ConfigError("cannot write summary.json in " + out_dir);
  summary << summary_json_text(trace, scenario);
  write_timeseries_csv(trace, (fs::path(out_dir) / "timeseries.csv").string());
}

int cmd_run(const RunOptions& options) {
  Scenario scenario;
  try {
    scenario = load_scenario(options);
  } catch (const ConfigError& e) {
    log(LogLevel::Error, e.what());
    return kExitConfigError;
  }
  try {
    log(LogLevel::Info, "running " + std::string(to_string(scenario.topology)) + " seed " +
                            std::to_string(scenario.seed));
    const SimTrace trace = run(scenario);
    write_run_outputs(trace, scenario, options.out_dir);
  } catch (const std::exception& e) {
    log(LogLevel::Error, e.what());
    return kExitRuntimeError;
  }
  return kExitOk;
}

namespace {

void accumulate(std::map<std::string, std::vector<double>>& table, const std::string& key,
                std::optional<double> value) {
  if (value.has_value()) table[key].push_back(*value);
}

}  // namespace

int cmd_sweep(const SweepOptions& options) {
  if (options.seeds < 1) {
    log(LogLevel::Error, "sweep needs at least one seed");
    return kExitConfigError;
  }
  RunOptions probe;
  probe.scenario_path = options.scenario_path;
  probe.duration_override_s = options.duration_override_s;
  probe.fec_interval_min = options.fec_interval_min;
  probe.fec_interval_max = options.fec_interval_max;
  try {
    probe.seed = 1;
    (void)load_scenario(probe);  // config problems fail the whole sweep up front
  } catch (const ConfigError& e) {
    log(LogLevel::Error, e.what());
    return kExitConfigError;
  }

  std::map<std::string, std::vector<double>> table;
  std::vector<int> failed_seeds;
  int completed = 0;

  for (int k = 1; k <= options.seeds; ++k) {
    RunOptions ro = probe;
    ro.seed = static_cast<std::uint64_t>(k);
    ro.out_dir = (fs::path(options.out_dir) / ("seed_" + std::to_string(k))).string();
    try {
      const Scenario scenario = load_scenario(ro);
      const SimTrace trace = run(scenario);
      write_run_outputs(trace, scenario, ro.out_dir);
      ++completed;

      for (const auto& name : rtp_flows_in(trace)) {
        const FlowSummary s = flow_summary(trace, name, scenario.mean_capacity());
        accumulate(table, name + ".goodput_kbps", s.goodput.bps / 1000.0);
        accumulate(table, name + ".loss_rate", s.loss_rate);
        accumulate(table, name + ".lost_frames", static_cast<double>(s.lost_frames));
        accumulate(table, name + ".fec_rate_kbps", s.fec_rate.bps / 1000.0);
        accumulate(table, name + ".frcc", s.frcc);
        accumulate(table, name + ".ffre", s.ffre);
        accumulate(table, name + ".abu", s.abu);
      }
      if (!tcp_flows_in(trace).empty()) {
        accumulate(table, "tfs", tfs(trace));
      }
    } catch (const std::exception& e) {
      log(LogLevel::Error, "seed " + std::to_string(k) + " failed: " + e.what());
      failed_seeds.push_back(k);
    }
  }

  json out;
  out["schema"] = "fbra-aggregate-v1";
  out["scenario_path"] = options.scenario_path;
  out["seeds"] = options.seeds;
  out["completed"] = completed;
  out["failed_seeds"] = failed_seeds;
  json metrics = json::object();
  for (const auto& [key, values] : table) {
    const MetricStats stats = aggregate(values);
    metrics[key] = {{"mean", stats.mean}, {"stddev", stats.stddev}, {"count", stats.count}};
  }
  out["metrics"] = std::move(metrics);

  fs::create_directories(options.out_dir);
  std::ofstream agg(fs::path(options.out_dir) / "aggregate.json", std::ios::trunc);
  if (!agg) {
    log(LogLevel::Error, "cannot write aggregate.json in " + options.out_dir);
    return kExitRuntimeError;
  }
  agg << out.dump(2) << "\n";

  return failed_seeds.empty() ? kExitOk : kExitRuntimeError;
}

}  // namespace fbra
