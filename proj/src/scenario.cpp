#include "fbra/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>

#include "fbra/endpoints.hpp"
#include "fbra/errors.hpp"
#include "fbra/event_loop.hpp"
#include "fbra/link.hpp"
#include "fbra/tcp.hpp"

namespace fbra {

const char* to_string(Topology t) {
  switch (t) {
    case Topology::SingleVarLink:
      return "single_var_link";
    case Topology::RtpVsTcp:
      return "rtp_vs_tcp";
    case Topology::MultiRtpVsTcp:
      return "multi_rtp_vs_tcp";
  }
  return "?";
}

Topology topology_from_string(const std::string& s) {
  if (s == "single_var_link") return Topology::SingleVarLink;
  if (s == "rtp_vs_tcp") return Topology::RtpVsTcp;
  if (s == "multi_rtp_vs_tcp") return Topology::MultiRtpVsTcp;
  throw ConfigError("unknown topology: " + s);
}

BitRate variable_capacity_schedule(SimTime t) {
  static constexpr std::int64_t kPattern[] = {256, 160, 100, 192};
  const std::int64_t segment = (t.us / (40 * kSecond)) % 4;
  return kbps(kPattern[segment]);
}

BitRate Scenario::capacity_at(SimTime t) const {
  if (!capacity_schedule.empty()) {
    BitRate rate = capacity_schedule.front().second;
    for (const auto& [start, r] : capacity_schedule) {
      if (t.us >= start) rate = r;
    }
    return rate;
  }
  if (bottleneck_capacity.has_value()) return *bottleneck_capacity;
  return variable_capacity_schedule(t);
}

BitRate Scenario::mean_capacity() const {
  if (duration <= 0) return capacity_at(SimTime{0});
  // sample at 100 ms granularity; segments are far coarser than that
  const Duration step = 100 * kMillisecond;
  std::int64_t acc = 0;
  std::int64_t samples = 0;
  for (Duration t = 0; t < duration; t += step) {
    acc += capacity_at(SimTime{t}).bps;
    ++samples;
  }
  return BitRate{acc / std::max<std::int64_t>(samples, 1)};
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::pair<Duration, BitRate>> parse_schedule_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open capacity schedule file: " + path);
  std::vector<std::pair<Duration, BitRate>> schedule;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    double start_s = 0;
    std::int64_t rate_kbps = 0;
    if (!(row >> start_s >> rate_kbps)) {
      throw ConfigError("bad schedule line: " + line);
    }
    schedule.emplace_back(static_cast<Duration>(start_s * kSecond), kbps(rate_kbps));
  }
  if (schedule.empty()) throw ConfigError("empty capacity schedule: " + path);
  std::sort(schedule.begin(), schedule.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return schedule;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  Scenario sc;
  bool topology_seen = false;
  bool rtp_seen = false;
  bool tcp_seen = false;

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value, got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError("empty value for key: " + key);

    try {
      if (key == "topology") {
        sc.topology = topology_from_string(value);
        topology_seen = true;
      } else if (key == "bottleneck_delay_ms") {
        sc.bottleneck_delay = std::stoll(value) * kMillisecond;
      } else if (key == "bottleneck_capacity_kbps") {
        sc.bottleneck_capacity = kbps(std::stoll(value));
      } else if (key == "capacity_schedule_file") {
        sc.capacity_schedule = parse_schedule_file(value);
      } else if (key == "rtp_flows") {
        sc.rtp_flows = std::stoi(value);
        rtp_seen = true;
      } else if (key == "tcp_flows") {
        sc.tcp_flows = std::stoi(value);
        tcp_seen = true;
      } else if (key == "duration_s") {
        sc.duration = static_cast<Duration>(std::stod(value) * kSecond);
      } else if (key == "seed") {
        sc.seed = std::stoull(value);
      } else {
        throw ConfigError("unknown scenario key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad value for key " + key + ": " + value);
    } catch (const std::out_of_range&) {
      throw ConfigError("value out of range for key " + key + ": " + value);
    }
  }

  if (!topology_seen) throw ConfigError("missing required key: topology");

  // per-topology defaults for anything not spelled out
  if (sc.topology == Topology::RtpVsTcp) {
    if (!rtp_seen) sc.rtp_flows = 1;
    if (!tcp_seen) sc.tcp_flows = 10;
    if (!sc.bottleneck_capacity.has_value() && sc.capacity_schedule.empty()) {
      sc.bottleneck_capacity = kbps(5000);
    }
  } else if (sc.topology == Topology::MultiRtpVsTcp) {
    if (!rtp_seen) sc.rtp_flows = 2;
    if (!tcp_seen) sc.tcp_flows = 10;
    if (!sc.bottleneck_capacity.has_value() && sc.capacity_schedule.empty()) {
      sc.bottleneck_capacity = kbps(5000);
    }
  } else {
    if (!rtp_seen) sc.rtp_flows = 1;
    if (!tcp_seen) sc.tcp_flows = 0;
  }

  validate(sc);
  return sc;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str());
}

void validate(const Scenario& sc) {
  if (sc.rtp_flows < 0 || sc.tcp_flows < 0) throw ConfigError("flow counts must be >= 0");
  if (sc.rtp_flows + sc.tcp_flows == 0) throw ConfigError("scenario has no flows");
  if (sc.duration < 0) throw ConfigError("duration must be >= 0");
  if (sc.bottleneck_delay <= 0) throw ConfigError("bottleneck delay must be positive");
  if (sc.queue_limit <= 0) throw ConfigError("queue limit must be positive");
  if (sc.fec_interval_min < kMinFecInterval || sc.fec_interval_max > kMaxFecInterval ||
      sc.fec_interval_min > sc.fec_interval_max) {
    throw ConfigError("fec interval bounds must stay within [2,14]");
  }
  if (sc.topology == Topology::SingleVarLink) {
    for (const auto& [start, rate] : sc.capacity_schedule) {
      if (rate < kbps(100) || rate > kbps(256)) {
        throw ConfigError("single_var_link capacity must stay within [100,256] kbps");
      }
    }
  }
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over (seed, stream) for independent per-flow generators
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SimTrace run(const Scenario& sc) {
  validate(sc);

  SimTrace trace;
  trace.duration = sc.duration;
  if (sc.duration == 0) return trace;

  EventLoop loop;
  const int total_flows = sc.rtp_flows + sc.tcp_flows;

  // shared bottleneck, one Link per direction
  Link::CapacityFn bottleneck_capacity = [&sc](SimTime t) { return sc.capacity_at(t); };

  std::vector<std::unique_ptr<Link>> egress_fwd(total_flows);  // bottleneck -> sinks
  std::vector<std::unique_ptr<Link>> egress_rev(total_flows);  // bottleneck -> sources

  auto fwd_dispatch = [&egress_fwd](PacketPtr pkt) {
    egress_fwd[pkt->flow]->transmit(std::move(pkt));
  };
  auto rev_dispatch = [&egress_rev](PacketPtr pkt) {
    egress_rev[pkt->flow]->transmit(std::move(pkt));
  };

  Link bottleneck_fwd(loop, bottleneck_capacity, sc.bottleneck_delay, sc.queue_limit,
                      fwd_dispatch);
  Link bottleneck_rev(loop, bottleneck_capacity, sc.bottleneck_delay, sc.queue_limit,
                      rev_dispatch);

  std::vector<std::unique_ptr<Link>> ingress_fwd(total_flows);  // sources -> bottleneck
  std::vector<std::unique_ptr<Link>> ingress_rev(total_flows);  // sinks -> bottleneck
  for (int f = 0; f < total_flows; ++f) {
    ingress_fwd[f] = std::make_unique<Link>(
        loop, sc.access_capacity, sc.access_delay, sc.queue_limit,
        [&bottleneck_fwd](PacketPtr pkt) { bottleneck_fwd.transmit(std::move(pkt)); });
    ingress_rev[f] = std::make_unique<Link>(
        loop, sc.access_capacity, sc.access_delay, sc.queue_limit,
        [&bottleneck_rev](PacketPtr pkt) { bottleneck_rev.transmit(std::move(pkt)); });
  }

  std::vector<std::unique_ptr<MediaSender>> senders;
  std::vector<std::unique_ptr<MediaReceiver>> receivers;
  std::vector<std::unique_ptr<TcpSender>> tcp_senders;
  std::vector<std::unique_ptr<TcpSink>> tcp_sinks;

  for (int i = 0; i < sc.rtp_flows; ++i) {
    const int flow = i;
    const std::string name = "rtp" + std::to_string(i);

    FbraController::Config controller_config;
    controller_config.fec_interval_min = sc.fec_interval_min;
    controller_config.fec_interval_max = sc.fec_interval_max;

    senders.push_back(std::make_unique<MediaSender>(
        loop, flow, name, 0x46425200u + i, trace, SenderConfig{}, controller_config,
        [link = ingress_fwd[flow].get()](PacketPtr pkt) { link->transmit(std::move(pkt)); }));
    receivers.push_back(std::make_unique<MediaReceiver>(
        loop, flow, name, trace, ReceiverConfig{},
        [link = ingress_rev[flow].get()](PacketPtr pkt) { link->transmit(std::move(pkt)); }));

    MediaSender* sender = senders.back().get();
    MediaReceiver* receiver = receivers.back().get();
    egress_fwd[flow] = std::make_unique<Link>(
        loop, sc.access_capacity, sc.access_delay, sc.queue_limit, [receiver](PacketPtr pkt) {
          if (pkt->kind == SimPacket::Kind::Media) {
            receiver->on_media(std::get<MediaPacket>(pkt->body), pkt->size_bytes);
          } else if (pkt->kind == SimPacket::Kind::Fec) {
            receiver->on_fec(std::get<FecPacket>(pkt->body));
          }
        });
    egress_rev[flow] = std::make_unique<Link>(
        loop, sc.access_capacity, sc.access_delay, sc.queue_limit, [sender](PacketPtr pkt) {
          if (pkt->kind == SimPacket::Kind::Rtcp) {
            sender->on_feedback(std::get<FeedbackReport>(pkt->body), pkt->size_bytes);
          }
        });

    // small stagger keeps identical flows from ticking in lockstep
    sender->stop_at(SimTime{0} + sc.duration);
    sender->start(SimTime{i * 100 * kMillisecond});
  }

  for (int j = 0; j < sc.tcp_flows; ++j) {
    const int flow = sc.rtp_flows + j;
    const std::string name = "tcp" + std::to_string(j);

    tcp_senders.push_back(std::make_unique<TcpSender>(
        loop, flow, mix_seed(sc.seed, static_cast<std::uint64_t>(flow)), TcpSender::Config{},
        [link = ingress_fwd[flow].get()](PacketPtr pkt) { link->transmit(std::move(pkt)); }));
    tcp_sinks.push_back(std::make_unique<TcpSink>(
        loop, flow, name, trace,
        [link = ingress_rev[flow].get()](PacketPtr pkt) { link->transmit(std::move(pkt)); }));

    TcpSender* tcp_sender = tcp_senders.back().get();
    TcpSink* tcp_sink = tcp_sinks.back().get();
    egress_fwd[flow] = std::make_unique<Link>(
        loop, sc.access_capacity, sc.access_delay, sc.queue_limit, [tcp_sink](PacketPtr pkt) {
          if (pkt->kind == SimPacket::Kind::TcpData) {
            tcp_sink->on_data(std::get<TcpSegment>(pkt->body), pkt->size_bytes);
          }
        });
    egress_rev[flow] = std::make_unique<Link>(
        loop, sc.access_capacity, sc.access_delay, sc.queue_limit,
        [tcp_sender](PacketPtr pkt) {
          if (pkt->kind == SimPacket::Kind::TcpAck) {
            tcp_sender->on_ack(std::get<TcpSegment>(pkt->body));
          }
        });

    tcp_sender->start();
  }

  loop.run_until(SimTime{0} + sc.duration);
  return trace;
}

}  // namespace fbra
