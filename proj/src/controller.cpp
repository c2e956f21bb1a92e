#include "fbra/controller.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fbra {

const char* to_string(ControllerState s) {
  switch (s) {
    case ControllerState::Stay:
      return "STAY";
    case ControllerState::Probe:
      return "PROBE";
    case ControllerState::Up:
      return "UP";
    case ControllerState::Down:
      return "DOWN";
  }
  return "?";
}

CongestionCues classify_cues(const FeedbackReport& report, SimTime interval_start,
                             SimTime interval_end, const OwdCorrelation& corr) {
  CongestionCues cues;
  cues.corr = corr;
  const SimTime midpoint{(interval_start.us + interval_end.us) / 2};
  for (const auto& e : report.loss_events) {
    cues.losses = true;
    if (e.at > midpoint) cues.recent_losses = true;
  }
  for (const auto& e : report.discard_events) {
    cues.discards = true;
    if (e.at > midpoint) cues.recent_discards = true;
  }
  return cues;
}

RateHistory::RateHistory(Duration window) : window_(window) {}

void RateHistory::record(SimTime at, BitRate goodput, BitRate sending, BitRate combined) {
  if (!have_initial_) {
    initial_goodput_ = goodput;
    have_initial_ = true;
  }
  entries_.push_back({at, goodput, sending, combined});
  evict(at);
}

void RateHistory::evict(SimTime now) {
  while (!entries_.empty() && now - entries_.front().at > window_) {
    entries_.pop_front();
  }
}

BitRate RateHistory::window_max(SimTime now) const {
  BitRate best{0};
  for (const auto& e : entries_) {
    if (now - e.at > window_) continue;
    best = std::max(best, e.combined);
  }
  return best;
}

BitRate RateHistory::ceiling(SimTime now) const {
  return std::max(window_max(now), initial_goodput_);
}

BitRate undershoot_rate(BitRate sending_rate, BitRate goodput) {
  const std::int64_t gap = std::max<std::int64_t>(0, sending_rate.bps - goodput.bps);
  const std::int64_t cut = (9 * (sending_rate.bps - 2 * gap)) / 10;
  return BitRate{std::clamp(cut, kMinMediaRate.bps, sending_rate.bps)};
}

BitRate bounce_back_rate(BitRate stored_goodput) {
  return BitRate{std::max((9 * stored_goodput.bps) / 10, kMinMediaRate.bps)};
}

int select_fec_interval(const RateHistory& rates, BitRate current_rate, SimTime now) {
  const BitRate ceiling = rates.ceiling(now);
  if (ceiling.bps <= 0) return kMaxFecInterval;
  const double rho = std::min(
      1.0, static_cast<double>(current_rate.bps) / static_cast<double>(ceiling.bps));
  const int interval = static_cast<int>(std::llround(2.0 + 12.0 * rho));
  return std::clamp(interval, kMinFecInterval, kMaxFecInterval);
}

ReportTiming on_report_timing(Duration arrival_gap, Duration rtt_median) {
  // strict comparison: a gap of exactly 1.5x the median is still regular
  return 2 * arrival_gap < 3 * rtt_median ? ReportTiming::Early : ReportTiming::Regular;
}

StepResult fbra_step(ControllerState state, ControllerState prev_state,
                     const CongestionCues& cues, const Thresholds& th, bool probe_blocked) {
  using RateAction = StepResult::RateAction;
  StepResult r;
  const double corr_high = cues.corr.corr_high;
  const double corr_low = cues.corr.corr_low;

  switch (state) {
    case ControllerState::Down:
      if (cues.recent_losses || cues.discards) {
        if (prev_state == ControllerState::Down) {
          r.new_state = ControllerState::Stay;
        } else {
          r.rate_action = (cues.discards && !cues.losses) ? RateAction::UndershootNoDisable
                                                          : RateAction::Undershoot;
          r.new_state = ControllerState::Down;
        }
      } else if (corr_high > th.alpha_undershoot) {
        r.rate_action = RateAction::Undershoot;
        r.new_state = ControllerState::Down;
      } else {
        r.new_state = ControllerState::Stay;
      }
      break;

    case ControllerState::Stay:
      if (cues.losses) {
        if (cues.recent_losses) {
          r.rate_action = RateAction::Undershoot;
          r.new_state = ControllerState::Down;
        } else {
          r.new_state = ControllerState::Stay;
        }
      } else if (cues.recent_discards) {
        r.rate_action = RateAction::Undershoot;
        r.new_state = ControllerState::Down;
      } else if (corr_high > th.alpha_stay) {
        if (prev_state == ControllerState::Stay) {
          r.rate_action = RateAction::Undershoot;
          r.new_state = ControllerState::Down;
        } else {
          r.new_state = ControllerState::Stay;
        }
      } else if (probe_blocked) {
        // operating close to the recent rate ceiling: hold one more interval
        r.new_state = ControllerState::Stay;
        r.deferred_probe = true;
      } else {
        r.new_state = ControllerState::Probe;
        r.fec_enabled = true;
      }
      break;

    case ControllerState::Probe:
      if (cues.recent_losses || cues.recent_discards) {
        r.rate_action = RateAction::Undershoot;
        r.new_state = ControllerState::Down;
      } else if (cues.losses || cues.discards) {
        r.new_state = ControllerState::Stay;
      } else if (corr_high > th.alpha_down_probe) {
        r.rate_action = RateAction::Undershoot;
        r.new_state = ControllerState::Down;
      } else if (corr_high > th.alpha_stay) {
        r.new_state = ControllerState::Stay;
      } else if (corr_low > th.beta) {
        r.increment_fec_interval = true;
        r.new_state = ControllerState::Probe;
        r.fec_enabled = true;
      } else {
        r.new_state = ControllerState::Up;
        r.rate_action = RateAction::AddFecRate;
      }
      break;

    case ControllerState::Up:
      if (cues.recent_losses || cues.discards || corr_high > th.alpha_down_up) {
        r.rate_action = RateAction::Undershoot;
        r.new_state = ControllerState::Down;
      } else {
        r.new_state = ControllerState::Stay;
      }
      break;
  }
  return r;
}

FbraController::FbraController(Config config)
    : config_(config),
      target_rate_(std::max(config.start_rate, config.min_rate)),
      fec_interval_(config.fec_interval_max),
      owd_(config.owd_capacity) {}

Duration FbraController::rtt_median() const {
  if (rtt_samples_.empty()) return 0;
  std::vector<Duration> sorted(rtt_samples_.begin(), rtt_samples_.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[(sorted.size() - 1) / 2];
}

void FbraController::note_rtt(const FeedbackReport& report, SimTime now) {
  if (report.lsr.us == 0 && report.dlsr == 0) return;
  Duration rtt = (now - report.lsr) - report.dlsr;
  if (rtt <= 0) rtt = 1;
  rtt_samples_.push_back(rtt);
  while (rtt_samples_.size() > 10) rtt_samples_.pop_front();
}

ControllerDecision FbraController::decide(ControllerState new_state, bool fec, SimTime) {
  prev_state_ = state_;
  state_ = new_state;
  fec_enabled_ = fec && new_state == ControllerState::Probe;

  ControllerDecision d;
  d.new_state = state_;
  d.target_media_rate = target_rate_;
  d.fec_enabled = fec_enabled_;
  d.fec_interval = fec_interval_;
  d.rate_control_disabled_until = disabled_until_;
  return d;
}

void FbraController::apply_undershoot(BitRate goodput, bool disable, SimTime now,
                                      Duration rtcp_interval) {
  stored_goodput_ = goodput;
  target_rate_ = std::max(undershoot_rate(target_rate_, goodput), config_.min_rate);
  if (disable) {
    // a bit more than one reporting interval: exactly one report gets ignored
    disabled_until_ = now + (5 * rtcp_interval) / 4;
    bounce_back_pending_ = true;
  }
}

int FbraController::clamp_interval(int interval) const {
  return std::clamp(interval, config_.fec_interval_min, config_.fec_interval_max);
}

FbraController::Output FbraController::on_report(const FeedbackReport& report,
                                                 const ReportContext& ctx) {
  const SimTime now = ctx.now;
  std::optional<Duration> arrival_gap;
  if (last_report_arrival_.has_value()) arrival_gap = now - *last_report_arrival_;
  last_report_arrival_ = now;
  note_rtt(report, now);

  if (disabled_until_.has_value() && now < *disabled_until_) {
    Output out;
    out.processed = false;
    out.decision = ControllerDecision{state_, target_rate_, fec_enabled_, fec_interval_,
                                      disabled_until_};
    return out;
  }

  owd_.admit(report);
  const OwdCorrelation corr = owd_.correlate_or_neutral(report.owd_sample);
  const SimTime interval_start = last_report_ts_.value_or(SimTime{0});
  const CongestionCues cues = classify_cues(report, interval_start, report.report_ts, corr);
  last_report_ts_ = report.report_ts;

  rates_.record(now, ctx.measured_goodput, target_rate_, ctx.combined_sent_rate);

  if (bounce_back_pending_) {
    bounce_back_pending_ = false;
    disabled_until_.reset();
    probe_deferred_ = false;
    const bool clean = report.clean() && corr.corr_high <= config_.thresholds.alpha_undershoot;
    if (clean) {
      target_rate_ = bounce_back_rate(stored_goodput_);
      return {true, decide(ControllerState::Stay, false, now)};
    }
    // congestion persists after the pause: undershoot again, keep control on
    apply_undershoot(ctx.measured_goodput, false, now, ctx.rtcp_interval);
    return {true, decide(ControllerState::Down, false, now)};
  }

  if (arrival_gap.has_value() && !rtt_samples_.empty() &&
      on_report_timing(*arrival_gap, rtt_median()) == ReportTiming::Early) {
    probe_deferred_ = false;
    apply_undershoot(ctx.measured_goodput, true, now, ctx.rtcp_interval);
    return {true, decide(ControllerState::Down, false, now)};
  }

  bool probe_blocked = false;
  if (state_ == ControllerState::Stay && !probe_deferred_) {
    const BitRate wmax = rates_.window_max(now);
    if (wmax.bps > 0 && 10 * target_rate_.bps > 9 * wmax.bps) probe_blocked = true;
  }

  const StepResult step =
      fbra_step(state_, prev_state_, cues, config_.thresholds, probe_blocked);
  probe_deferred_ = step.deferred_probe;

  switch (step.rate_action) {
    case StepResult::RateAction::Undershoot:
      apply_undershoot(ctx.measured_goodput, true, now, ctx.rtcp_interval);
      break;
    case StepResult::RateAction::UndershootNoDisable:
      apply_undershoot(ctx.measured_goodput, false, now, ctx.rtcp_interval);
      break;
    case StepResult::RateAction::AddFecRate:
      target_rate_ = target_rate_ + ctx.nominal_fec_rate;
      break;
    case StepResult::RateAction::Keep:
      break;
  }

  if (step.new_state == ControllerState::Probe) {
    if (state_ != ControllerState::Probe) {
      fec_interval_ = clamp_interval(select_fec_interval(rates_, target_rate_, now));
    } else if (step.increment_fec_interval) {
      fec_interval_ = clamp_interval(fec_interval_ + 1);
    }
  }

  return {true, decide(step.new_state, step.fec_enabled, now)};
}

ControllerDecision FbraController::on_feedback_timeout(SimTime now) {
  target_rate_ = std::max(BitRate{target_rate_.bps / 2}, config_.min_rate);
  disabled_until_.reset();
  bounce_back_pending_ = false;
  probe_deferred_ = false;
  return decide(ControllerState::Down, false, now);
}

}  // namespace fbra
