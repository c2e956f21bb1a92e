#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fbra/time.hpp"
#include "fbra/trace.hpp"

namespace fbra {

struct FlowSummary {
  std::string flow;
  BitRate goodput{0};       // played + recovered media bits over the run
  double loss_rate = 0.0;   // unrecovered lost packets / packets sent
  std::int64_t lost_frames = 0;
  BitRate fec_rate{0};
  std::optional<double> frcc;
  std::optional<double> ffre;
  std::optional<double> abu;  // combined sending rate / link capacity

  std::int64_t packets_sent = 0;
  std::int64_t packets_lost = 0;  // includes later-recovered ones
  std::int64_t packets_recovered = 0;
  std::int64_t packets_discarded = 0;
};

// Flow names present in the trace, sorted.
std::vector<std::string> rtp_flows_in(const SimTrace& trace);
std::vector<std::string> tcp_flows_in(const SimTrace& trace);

// Fraction of FEC episodes that raised or kept the rate. An episode opens on
// a STAY -> PROBE transition and closes at the first UP (raises), STAY
// (keeps) or DOWN (incorrect); one cut off by the end of the run counts as
// keeps. Absent when FEC was never enabled.
std::optional<double> frcc(const SimTrace& trace, const std::string& flow);

// Fraction of FEC-protected lost frames that were fully recovered. Absent
// when no protected frame lost anything.
std::optional<double> ffre(const SimTrace& trace, const std::string& flow);

// Per-TCP-flow throughput over the per-flow fair share of all traffic.
// Throws NoTcpFlows when the trace has no TCP flows.
double tfs(const SimTrace& trace);

// Throws UnknownFlow. `link_capacity` enables the ABU field.
FlowSummary flow_summary(const SimTrace& trace, const std::string& flow,
                         std::optional<BitRate> link_capacity = std::nullopt);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  int count = 0;
};

MetricStats aggregate(const std::vector<double>& values);

}  // namespace fbra
