#pragma once

#include <deque>
#include <optional>

#include "fbra/owd.hpp"
#include "fbra/packets.hpp"
#include "fbra/time.hpp"

namespace fbra {

enum class ControllerState { Stay, Probe, Up, Down };

const char* to_string(ControllerState s);

struct Thresholds {
  double alpha_stay = 1.1;
  double alpha_down_probe = 1.6;  // DOWN threshold while probing
  double alpha_down_up = 1.4;     // tighter threshold right after a rate raise
  double alpha_undershoot = 2.0;
  double beta = 1.2;
};

struct CongestionCues {
  bool losses = false;
  bool recent_losses = false;
  bool discards = false;
  bool recent_discards = false;
  OwdCorrelation corr;
};

// Loss/discard flags from the report's event lists; an event is "recent" when
// it falls in the second half of the reporting interval the report closes.
CongestionCues classify_cues(const FeedbackReport& report, SimTime interval_start,
                             SimTime interval_end, const OwdCorrelation& corr);

// Sliding window of the rates seen over the last two seconds plus the first
// goodput ever measured; the ceiling against which the current rate is judged
// low or high.
class RateHistory {
 public:
  explicit RateHistory(Duration window = 2 * kSecond);

  void record(SimTime at, BitRate goodput, BitRate sending, BitRate combined);

  // Highest combined rate inside the window (combined >= sending >= goodput).
  BitRate window_max(SimTime now) const;
  // max(window_max, initial goodput).
  BitRate ceiling(SimTime now) const;
  BitRate initial_goodput() const { return initial_goodput_; }
  bool empty() const { return entries_.empty(); }

 private:
  struct Entry {
    SimTime at;
    BitRate goodput;
    BitRate sending;
    BitRate combined;
  };
  Duration window_;
  std::deque<Entry> entries_;
  BitRate initial_goodput_{0};
  bool have_initial_ = false;

  void evict(SimTime now);
};

// New sending rate after congestion: twice the send/goodput gap below the
// sending rate, at 90%, floored at the 32 kbps minimum.
BitRate undershoot_rate(BitRate sending_rate, BitRate goodput);

// Rate restored after a successful post-undershoot probe window.
BitRate bounce_back_rate(BitRate stored_goodput);

// Linear map from the current rate's position below the ceiling to [2,14]:
// far below the ceiling means small interval (dense parity, fast ramp).
int select_fec_interval(const RateHistory& rates, BitRate current_rate, SimTime now);

enum class ReportTiming { Regular, Early };

// A report arriving sooner than 1.5x the median RTT is an early report and
// forces the DOWN path regardless of its cues.
ReportTiming on_report_timing(Duration arrival_gap, Duration rtt_median);

// Pure transcription of the per-state transition rules. `probe_blocked` is
// the caller's verdict on the 90%-of-recent-max guard for the direct
// STAY -> PROBE transition.
struct StepResult {
  ControllerState new_state = ControllerState::Stay;
  bool fec_enabled = false;
  bool increment_fec_interval = false;
  bool deferred_probe = false;  // probe guard held the transition one interval
  enum class RateAction { Keep, Undershoot, UndershootNoDisable, AddFecRate } rate_action =
      RateAction::Keep;
};

StepResult fbra_step(ControllerState state, ControllerState prev_state,
                     const CongestionCues& cues, const Thresholds& thresholds,
                     bool probe_blocked);

struct ControllerDecision {
  ControllerState new_state = ControllerState::Stay;
  BitRate target_media_rate{0};
  bool fec_enabled = false;
  int fec_interval = kMaxFecInterval;
  std::optional<SimTime> rate_control_disabled_until;
};

// Consumes one feedback report per step and emits one decision. Owns the OWD
// watermark history, the rate history, RTT bookkeeping, the undershoot /
// bounce-back lifecycle and the probe-guard deferral.
class FbraController {
 public:
  struct Config {
    BitRate start_rate = kStartMediaRate;
    BitRate min_rate = kMinMediaRate;
    Thresholds thresholds;
    std::size_t owd_capacity = 20;
    int fec_interval_min = kMinFecInterval;
    int fec_interval_max = kMaxFecInterval;
  };

  struct ReportContext {
    SimTime now;                 // arrival time at the sender
    BitRate measured_goodput;    // sent minus reported lost/discarded, over the interval
    BitRate nominal_fec_rate;    // fec_bitrate() at the current interval and packet size
    BitRate combined_sent_rate;  // media+fec actually injected since the last report
    Duration rtcp_interval;      // current regular reporting interval estimate
  };

  struct Output {
    bool processed = false;  // false: report ignored inside the disable window
    ControllerDecision decision;
  };

  explicit FbraController(Config config);

  Output on_report(const FeedbackReport& report, const ReportContext& ctx);

  // No feedback for >= 2 s: halve the rate and drop to DOWN.
  ControllerDecision on_feedback_timeout(SimTime now);

  ControllerState state() const { return state_; }
  BitRate target_rate() const { return target_rate_; }
  bool fec_enabled() const { return fec_enabled_; }
  int fec_interval() const { return fec_interval_; }
  Duration rtt_median() const;
  const OwdTracker& owd() const { return owd_; }
  const RateHistory& rates() const { return rates_; }

  static constexpr Duration kFeedbackTimeout = 2 * kSecond;

 private:
  Config config_;
  ControllerState state_ = ControllerState::Stay;
  ControllerState prev_state_ = ControllerState::Stay;
  BitRate target_rate_;
  bool fec_enabled_ = false;
  int fec_interval_;
  bool probe_deferred_ = false;

  OwdTracker owd_;
  RateHistory rates_;

  std::optional<SimTime> disabled_until_;
  bool bounce_back_pending_ = false;
  BitRate stored_goodput_{0};

  std::optional<SimTime> last_report_arrival_;
  std::optional<SimTime> last_report_ts_;  // receiver clock, previous processed report
  std::deque<Duration> rtt_samples_;       // last 10

  void note_rtt(const FeedbackReport& report, SimTime now);
  ControllerDecision decide(ControllerState new_state, bool fec, SimTime now);
  void apply_undershoot(BitRate goodput, bool disable, SimTime now, Duration rtcp_interval);
  int clamp_interval(int interval) const;
};

}  // namespace fbra
