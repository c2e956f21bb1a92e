#include "fbra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "fbra/controller.hpp"
#include "fbra/errors.hpp"

namespace fbra {

namespace {

std::vector<std::string> flows_with_prefix(const SimTrace& trace, const std::string& prefix) {
  std::set<std::string> names;
  for (const auto& e : trace.events) {
    if (e.flow.rfind(prefix, 0) == 0) names.insert(e.flow);
  }
  return {names.begin(), names.end()};
}

}  // namespace

std::vector<std::string> rtp_flows_in(const SimTrace& trace) {
  return flows_with_prefix(trace, "rtp");
}

std::vector<std::string> tcp_flows_in(const SimTrace& trace) {
  return flows_with_prefix(trace, "tcp");
}

std::optional<double> frcc(const SimTrace& trace, const std::string& flow) {
  int episodes = 0;
  int correct = 0;
  bool in_episode = false;
  // the controller starts in STAY
  std::string prev = "STAY";

  for (const auto& e : trace.events) {
    if (e.kind != TraceEventKind::State || e.flow != flow) continue;
    const std::string& state = e.extra;
    if (!in_episode && prev == "STAY" && state == "PROBE") {
      in_episode = true;
      ++episodes;
    } else if (in_episode && state != "PROBE") {
      if (state == "UP" || state == "STAY") ++correct;  // raises or keeps
      in_episode = false;
    }
    prev = state;
  }
  if (in_episode) ++correct;  // truncated by the end of the run, no DOWN seen

  if (episodes == 0) return std::nullopt;
  return static_cast<double>(correct) / episodes;
}

std::optional<double> ffre(const SimTrace& trace, const std::string& flow) {
  std::unordered_map<std::int64_t, std::int64_t> frame_of;  // seq -> frame
  std::unordered_map<std::int64_t, int> frame_size;         // frame -> fragments
  std::unordered_set<std::int64_t> covered_seqs;
  std::unordered_set<std::int64_t> lost_seqs;
  std::unordered_set<std::int64_t> recovered_seqs;

  for (const auto& e : trace.events) {
    if (e.flow != flow) continue;
    switch (e.kind) {
      case TraceEventKind::SendRtp: {
        const std::int64_t frame = std::stoll(e.extra);
        frame_of[e.seq] = frame;
        ++frame_size[frame];
        break;
      }
      case TraceEventKind::SendFec: {
        const int len = std::stoi(e.extra);
        for (int i = 0; i < len; ++i) covered_seqs.insert(e.seq + i);
        break;
      }
      case TraceEventKind::Loss:
        lost_seqs.insert(e.seq);
        break;
      case TraceEventKind::Recovered:
        recovered_seqs.insert(e.seq);
        break;
      default:
        break;
    }
  }

  // per frame: did it lose fragments, were they all recovered, was it covered
  std::unordered_map<std::int64_t, bool> frame_lost, frame_all_recovered, frame_covered;
  for (const auto seq : lost_seqs) {
    auto it = frame_of.find(seq);
    if (it == frame_of.end()) continue;
    frame_lost[it->second] = true;
    auto& all = frame_all_recovered.try_emplace(it->second, true).first->second;
    if (!recovered_seqs.contains(seq)) all = false;
  }
  for (const auto seq : covered_seqs) {
    auto it = frame_of.find(seq);
    if (it != frame_of.end()) frame_covered[it->second] = true;
  }

  std::int64_t frames_recovered = 0;
  std::int64_t frames_protected_but_lost = 0;
  for (const auto& [frame, lost] : frame_lost) {
    if (!lost) continue;
    const bool recovered = frame_all_recovered[frame];
    if (recovered) {
      ++frames_recovered;
    } else if (frame_covered.contains(frame)) {
      ++frames_protected_but_lost;
    }
  }

  const std::int64_t denom = frames_recovered + frames_protected_but_lost;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(frames_recovered) / static_cast<double>(denom);
}

namespace {

struct DeliveryStats {
  std::int64_t delivered_bits = 0;  // played + recovered for RTP, acked for TCP
};

std::int64_t rtp_goodput_bits(const SimTrace& trace, const std::string& flow) {
  std::int64_t recv_bits = 0;
  std::int64_t discard_bits = 0;
  std::int64_t recovered_bits = 0;
  for (const auto& e : trace.events) {
    if (e.flow != flow) continue;
    if (e.kind == TraceEventKind::Recv) recv_bits += e.size_bytes * 8;
    if (e.kind == TraceEventKind::Discard) discard_bits += e.size_bytes * 8;
    if (e.kind == TraceEventKind::Recovered) recovered_bits += e.size_bytes * 8;
  }
  return recv_bits - discard_bits + recovered_bits;
}

std::int64_t tcp_delivered_bits(const SimTrace& trace, const std::string& flow) {
  std::int64_t bits = 0;
  for (const auto& e : trace.events) {
    if (e.flow == flow && e.kind == TraceEventKind::Recv) bits += e.size_bytes * 8;
  }
  return bits;
}

}  // namespace

double tfs(const SimTrace& trace) {
  const auto tcp_flows = tcp_flows_in(trace);
  if (tcp_flows.empty()) throw NoTcpFlows("trace has no TCP flows");
  const auto rtp_flows = rtp_flows_in(trace);

  std::int64_t tcp_bits = 0;
  for (const auto& f : tcp_flows) tcp_bits += tcp_delivered_bits(trace, f);
  std::int64_t total_bits = tcp_bits;
  for (const auto& f : rtp_flows) total_bits += rtp_goodput_bits(trace, f);

  if (total_bits == 0) return 0.0;
  const double n_tcp = static_cast<double>(tcp_flows.size());
  const double n_flows = static_cast<double>(tcp_flows.size() + rtp_flows.size());
  const double tcp_share = static_cast<double>(tcp_bits) / n_tcp;
  const double fair_share = static_cast<double>(total_bits) / n_flows;
  return tcp_share / fair_share;
}

FlowSummary flow_summary(const SimTrace& trace, const std::string& flow,
                         std::optional<BitRate> link_capacity) {
  FlowSummary s;
  s.flow = flow;

  bool seen = false;
  std::int64_t sent_bytes = 0;
  std::int64_t fec_bytes = 0;
  std::int64_t recv_bits = 0;
  std::int64_t discard_bits = 0;
  std::int64_t recovered_bits = 0;
  std::unordered_map<std::int64_t, std::int64_t> frame_of;
  std::unordered_set<std::int64_t> lost, recovered;

  for (const auto& e : trace.events) {
    if (e.flow != flow) continue;
    seen = true;
    switch (e.kind) {
      case TraceEventKind::SendRtp:
        ++s.packets_sent;
        sent_bytes += e.size_bytes;
        frame_of[e.seq] = std::stoll(e.extra);
        break;
      case TraceEventKind::SendFec:
        fec_bytes += e.size_bytes;
        break;
      case TraceEventKind::Recv:
        recv_bits += e.size_bytes * 8;
        break;
      case TraceEventKind::Discard:
        ++s.packets_discarded;
        discard_bits += e.size_bytes * 8;
        break;
      case TraceEventKind::Loss:
        lost.insert(e.seq);
        break;
      case TraceEventKind::Recovered:
        recovered.insert(e.seq);
        recovered_bits += e.size_bytes * 8;
        break;
      default:
        break;
    }
  }
  if (!seen) throw UnknownFlow("flow not present in trace: " + flow);

  const Duration duration = std::max<Duration>(trace.duration, 1);
  s.goodput = BitRate{(recv_bits - discard_bits + recovered_bits) * kSecond / duration};
  s.fec_rate = BitRate{fec_bytes * 8 * kSecond / duration};

  s.packets_lost = static_cast<std::int64_t>(lost.size());
  s.packets_recovered = static_cast<std::int64_t>(recovered.size());
  std::int64_t unrecovered = 0;
  std::set<std::int64_t> lost_frames;
  for (const auto seq : lost) {
    if (recovered.contains(seq)) continue;
    ++unrecovered;
    auto it = frame_of.find(seq);
    if (it != frame_of.end()) lost_frames.insert(it->second);
  }
  s.lost_frames = static_cast<std::int64_t>(lost_frames.size());
  s.loss_rate = s.packets_sent > 0
                    ? static_cast<double>(unrecovered) / static_cast<double>(s.packets_sent)
                    : 0.0;

  s.frcc = frcc(trace, flow);
  s.ffre = ffre(trace, flow);

  if (link_capacity.has_value() && link_capacity->bps > 0) {
    const double combined_rate =
        static_cast<double>((sent_bytes + fec_bytes) * 8) * kSecond / duration;
    s.abu = combined_rate / static_cast<double>(link_capacity->bps);
  }
  return s;
}

MetricStats aggregate(const std::vector<double>& values) {
  MetricStats stats;
  stats.count = static_cast<int>(values.size());
  if (values.empty()) return stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / values.size();
  double variance = 0.0;
  for (double v : values) variance += (v - stats.mean) * (v - stats.mean);
  variance /= values.size();
  stats.stddev = std::sqrt(variance);
  return stats;
}

}  // namespace fbra
