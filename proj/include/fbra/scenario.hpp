#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbra/time.hpp"
#include "fbra/trace.hpp"

namespace fbra {

enum class Topology { SingleVarLink, RtpVsTcp, MultiRtpVsTcp };

const char* to_string(Topology t);
Topology topology_from_string(const std::string& s);

// Dumbbell: per-flow access links into a shared duplex bottleneck. Feedback
// and TCP acks ride the reverse direction of the same bottleneck.
struct Scenario {
  Topology topology = Topology::SingleVarLink;
  Duration bottleneck_delay = 50 * kMillisecond;
  std::optional<BitRate> bottleneck_capacity;  // fixed rate when set
  // piecewise-constant capacity: (segment start, rate), sorted by start;
  // empty means the built-in variable pattern (single_var_link) or the fixed rate
  std::vector<std::pair<Duration, BitRate>> capacity_schedule;
  int rtp_flows = 1;
  int tcp_flows = 0;
  Duration duration = 300 * kSecond;
  std::uint64_t seed = 1;

  BitRate access_capacity = kbps(100'000);  // 100 Mbps
  Duration access_delay = 1 * kMillisecond;
  int queue_limit = 50;

  int fec_interval_min = 2;
  int fec_interval_max = 14;

  // capacity in force at simulation time t
  BitRate capacity_at(SimTime t) const;
  // time average over the run, for bandwidth-utilization metrics
  BitRate mean_capacity() const;
};

// Built-in variable-link pattern: 40 s segments cycling 256/160/100/192 kbps.
BitRate variable_capacity_schedule(SimTime t);

// key = value text; unknown keys are rejected so typos surface immediately.
Scenario parse_scenario_text(const std::string& text);
Scenario parse_scenario_file(const std::string& path);

void validate(const Scenario& scenario);

SimTrace run(const Scenario& scenario);

}  // namespace fbra
