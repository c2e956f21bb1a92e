#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fbra/controller.hpp"
#include "fbra/event_loop.hpp"
#include "fbra/fec.hpp"
#include "fbra/link.hpp"
#include "fbra/trace.hpp"

namespace fbra {

struct SenderConfig {
  int fps = 30;
  BitRate start_rate = kStartMediaRate;
  BitRate min_rate = kMinMediaRate;
  int mtu = kMtu;
};

struct ReceiverConfig {
  Duration delay_max = 400 * kMillisecond;
  int rtcp_interval_factor = 2;  // x RTT estimate
  Duration min_rtcp_interval = 50 * kMillisecond;
  int early_budget_regular_reports = 2;  // one early report per two regular ones
  int loss_burst_trigger = 3;
  int loss_finalize_gap = 3;  // a gap is lost once a packet this far ahead arrived
};

// One frame's worth of packets at the instantaneous rate: a single packet
// when the frame fits the MTU payload budget, otherwise equal-as-possible
// fragments sharing the frame id.
std::vector<MediaPacket> generate_frame(SimTime now, BitRate target_rate,
                                        const SenderConfig& config, std::uint32_t ssrc,
                                        Seq first_seq, std::int64_t frame_id);

// Media source: paces frames, schedules parity packets after each complete
// FEC block, measures goodput from the feedback it gets, and lets the FBRA
// controller steer rate and FEC. Trace events carry extended (unwrapped)
// sequence numbers; only the wire sticks to 16 bits.
class MediaSender {
 public:
  using Send = std::function<void(PacketPtr)>;

  MediaSender(EventLoop& loop, int flow, std::string flow_name, std::uint32_t ssrc,
              SimTrace& trace, SenderConfig config, FbraController::Config controller_config,
              Send send);

  void start(SimTime at);
  void stop_at(SimTime at) { stream_end_ = at; }
  void on_feedback(const FeedbackReport& report, int wire_size);

  BitRate media_rate() const { return media_rate_; }
  const FbraController& controller() const { return controller_; }
  std::int64_t media_packets_sent() const { return next_ext_seq_; }

 private:
  EventLoop& loop_;
  int flow_;
  std::string flow_name_;
  std::uint32_t ssrc_;
  SimTrace& trace_;
  SenderConfig config_;
  Send send_;

  FbraController controller_;
  BitRate media_rate_;
  bool fec_enabled_ = false;
  int fec_interval_;

  SimTime stream_start_;
  std::optional<SimTime> stream_end_;
  std::int64_t frame_count_ = 0;
  std::int64_t next_ext_seq_ = 0;  // low 16 bits go on the wire

  std::vector<MediaPacket> fec_block_;
  std::int64_t fec_block_ext_base_ = 0;

  struct SentRecord {
    int size_bytes = 0;
    SimTime at;
  };
  std::map<std::int64_t, SentRecord> sent_history_;  // keyed by extended seq

  // per-reporting-interval accounting
  std::int64_t media_bytes_interval_ = 0;
  std::int64_t media_count_interval_ = 0;
  std::int64_t fec_bytes_interval_ = 0;
  std::optional<std::int64_t> last_acked_high_;
  std::optional<SimTime> last_report_ts_;
  std::optional<SimTime> last_report_arrival_;
  Duration smoothed_report_gap_ = 0;

  SimTime last_feedback_at_;
  std::uint64_t watchdog_generation_ = 0;

  void frame_tick(std::int64_t frame_index);
  void send_media_packet(MediaPacket pkt);
  void apply_decision(const ControllerDecision& decision);
  void emit_state_events(const ControllerDecision& decision);
  BitRate measure_goodput(const FeedbackReport& report, std::int64_t ext_highest) const;
  void arm_watchdog();
};

enum class PacketDisposition { Played, DiscardedLate, Lost, Recovered };

// Media sink: playout-deadline discard, gap-based loss detection, parity
// recovery, and RTCP report construction with per-event times.
class MediaReceiver {
 public:
  using Send = std::function<void(PacketPtr)>;

  MediaReceiver(EventLoop& loop, int flow, std::string flow_name, SimTrace& trace,
                ReceiverConfig config, Send send_report);

  void on_media(const MediaPacket& pkt, int wire_size);
  void on_fec(const FecPacket& fec);

  std::optional<PacketDisposition> disposition(std::int64_t ext_seq) const;
  Duration rtt_estimate() const;  // 2x smoothed one-way delay

 private:
  EventLoop& loop_;
  int flow_;
  std::string flow_name_;
  SimTrace& trace_;
  ReceiverConfig config_;
  Send send_report_;

  std::int64_t ext_highest_ = -1;
  std::map<std::int64_t, MediaPacket> cache_;  // recent payloads for parity recovery
  std::map<std::int64_t, PacketDisposition> dispositions_;

  struct Gap {
    SimTime revealed_at;
    SimTime reveal_send_ts;  // send time of the packet that exposed the gap
  };
  std::map<std::int64_t, Gap> pending_gaps_;

  bool timer_started_ = false;
  std::uint64_t timer_generation_ = 0;
  std::int64_t report_count_ = 0;
  int regulars_since_early_;

  // interval state for the next report
  std::vector<ReportedEvent> loss_events_;
  std::vector<ReportedEvent> discard_events_;
  int interval_received_ = 0;
  std::int64_t cumulative_lost_ = 0;

  Duration last_owd_ = 0;
  Duration smoothed_owd_ = 0;
  Duration jitter_ = 0;
  std::optional<SimTime> last_arrival_;
  SimTime last_send_ts_;
  SimTime last_pkt_arrival_;

  std::int64_t unwrap(Seq s) const;
  Duration report_interval() const;
  void schedule_report(Duration in);
  void send_report(bool early);
  void finalize_gaps();
  void note_loss(std::int64_t ext_seq);
  void maybe_trigger_early(Duration owd, int burst_len);
  void prune();
};

}  // namespace fbra
