#include "fbra/endpoints.hpp"

#include <algorithm>
#include <cmath>

namespace fbra {

std::vector<MediaPacket> generate_frame(SimTime now, BitRate target_rate,
                                        const SenderConfig& config, std::uint32_t ssrc,
                                        Seq first_seq, std::int64_t frame_id) {
  const std::int64_t frame_bytes =
      target_rate.bps / (8 * static_cast<std::int64_t>(config.fps));
  const int budget = config.mtu - kMediaHeaderBytes;

  const int fragments =
      frame_bytes <= budget ? 1 : static_cast<int>((frame_bytes + budget - 1) / budget);
  const std::int64_t base = frame_bytes / fragments;
  const std::int64_t remainder = frame_bytes % fragments;

  std::vector<MediaPacket> out;
  out.reserve(fragments);
  for (int i = 0; i < fragments; ++i) {
    MediaPacket p;
    p.ssrc = ssrc;
    p.seq = static_cast<Seq>(first_seq + i);
    p.frame_id = frame_id;
    p.frame_ts = now;
    p.send_ts = now;
    p.is_fragment = fragments > 1;
    p.fragment_index = i;
    p.fragment_count = fragments;
    const std::int64_t size = base + (i < remainder ? 1 : 0);
    p.payload.resize(static_cast<std::size_t>(size));
    for (std::size_t b = 0; b < p.payload.size(); ++b) {
      p.payload[b] = static_cast<std::uint8_t>((p.seq * 131 + b * 31 + frame_id) & 0xff);
    }
    out.push_back(std::move(p));
  }
  return out;
}

MediaSender::MediaSender(EventLoop& loop, int flow, std::string flow_name, std::uint32_t ssrc,
                         SimTrace& trace, SenderConfig config,
                         FbraController::Config controller_config, Send send)
    : loop_(loop),
      flow_(flow),
      flow_name_(std::move(flow_name)),
      ssrc_(ssrc),
      trace_(trace),
      config_(config),
      send_(std::move(send)),
      controller_(controller_config),
      media_rate_(std::max(config.start_rate, config.min_rate)),
      fec_interval_(controller_config.fec_interval_max) {}

void MediaSender::start(SimTime at) {
  stream_start_ = at;
  last_feedback_at_ = at;
  loop_.at(at, [this] { frame_tick(0); });
  arm_watchdog();
}

void MediaSender::frame_tick(std::int64_t frame_index) {
  const SimTime now = loop_.now();
  if (stream_end_.has_value() && now >= *stream_end_) return;

  auto packets = generate_frame(now, media_rate_, config_, ssrc_,
                                static_cast<Seq>(next_ext_seq_ & 0xffff), frame_count_);
  ++frame_count_;
  for (auto& pkt : packets) {
    send_media_packet(std::move(pkt));
  }

  // integer schedule without cumulative drift: tick k at start + k/fps seconds
  const SimTime next = stream_start_ + ((frame_index + 1) * kSecond) / config_.fps;
  loop_.at(next, [this, frame_index] { frame_tick(frame_index + 1); });
}

void MediaSender::send_media_packet(MediaPacket pkt) {
  const SimTime now = loop_.now();
  const std::int64_t ext = next_ext_seq_++;
  media_bytes_interval_ += pkt.size_bytes();
  ++media_count_interval_;
  sent_history_[ext] = {pkt.size_bytes(), now};
  trace_.add(now, TraceEventKind::SendRtp, flow_name_, ext, pkt.size_bytes(),
             std::to_string(pkt.frame_id));

  std::optional<FecPacket> fec;
  if (fec_enabled_) {
    if (fec_block_.empty()) fec_block_ext_base_ = ext;
    fec_block_.push_back(pkt);
    if (static_cast<int>(fec_block_.size()) >= fec_interval_) {
      fec = encode_block(fec_block_);
      fec->send_ts = now;
      fec_block_.clear();
    }
  }

  auto mp = std::make_shared<SimPacket>();
  mp->kind = SimPacket::Kind::Media;
  mp->flow = flow_;
  mp->size_bytes = pkt.size_bytes();
  mp->body = std::move(pkt);
  send_(std::move(mp));

  // parity goes out strictly behind the packet that completed its block
  if (fec.has_value()) {
    fec_bytes_interval_ += fec->size_bytes();
    trace_.add(now, TraceEventKind::SendFec, flow_name_, fec_block_ext_base_,
               fec->size_bytes(), std::to_string(fec->block_len));
    auto fp = std::make_shared<SimPacket>();
    fp->kind = SimPacket::Kind::Fec;
    fp->flow = flow_;
    fp->size_bytes = fec->size_bytes();
    fp->body = std::move(*fec);
    send_(std::move(fp));
  }
}

BitRate MediaSender::measure_goodput(const FeedbackReport& report,
                                     std::int64_t ext_highest) const {
  if (!sent_history_.empty()) {
    const std::int64_t low = last_acked_high_.value_or(-1);
    std::int64_t window_bytes = 0;
    for (auto it = sent_history_.upper_bound(low);
         it != sent_history_.end() && it->first <= ext_highest; ++it) {
      window_bytes += it->second.size_bytes;
    }
    std::int64_t failed_bytes = 0;
    auto subtract_events = [&](const std::vector<ReportedEvent>& events) {
      for (const auto& e : events) {
        const std::int64_t ext = unwrap_seq(e.seq, ext_highest);
        if (ext <= low || ext > ext_highest) continue;  // outside this interval
        auto it = sent_history_.find(ext);
        if (it != sent_history_.end()) failed_bytes += it->second.size_bytes;
      }
    };
    subtract_events(report.loss_events);
    subtract_events(report.discard_events);

    const SimTime interval_start = last_report_ts_.value_or(stream_start_);
    const Duration interval = report.report_ts - interval_start;
    if (interval > 0) {
      const std::int64_t delivered = std::max<std::int64_t>(0, window_bytes - failed_bytes);
      // delivery cannot outrun the sending rate; window misalignment may
      // otherwise overshoot slightly
      return std::min(BitRate{delivered * 8 * kSecond / interval}, media_rate_);
    }
  }
  return media_rate_;
}

void MediaSender::on_feedback(const FeedbackReport& report, int wire_size) {
  const SimTime now = loop_.now();
  last_feedback_at_ = now;
  arm_watchdog();

  if (last_report_arrival_.has_value()) {
    const Duration gap = now - *last_report_arrival_;
    smoothed_report_gap_ =
        smoothed_report_gap_ == 0 ? gap : (9 * smoothed_report_gap_ + gap) / 10;
  }

  const std::int64_t ext_highest = unwrap_seq(report.highest_seq, next_ext_seq_ - 1);

  FbraController::ReportContext ctx;
  ctx.now = now;
  ctx.measured_goodput = measure_goodput(report, ext_highest);

  const Duration sent_interval = now - last_report_arrival_.value_or(stream_start_);
  const std::int64_t sent_bytes = media_bytes_interval_ + fec_bytes_interval_;
  ctx.combined_sent_rate =
      sent_interval > 0 ? BitRate{sent_bytes * 8 * kSecond / sent_interval} : media_rate_;

  const int avg_packet =
      media_count_interval_ > 0
          ? static_cast<int>(media_bytes_interval_ / media_count_interval_)
          : static_cast<int>(media_rate_.bps / (8 * config_.fps)) + kMediaHeaderBytes;
  ctx.nominal_fec_rate = fec_bitrate(media_rate_, fec_interval_, std::max(avg_packet, 1));
  ctx.rtcp_interval = smoothed_report_gap_ > 0 ? smoothed_report_gap_ : 100 * kMillisecond;

  const auto out = controller_.on_report(report, ctx);
  trace_.add(now, TraceEventKind::RtcpRecv, flow_name_, ext_highest, wire_size,
             out.processed ? "" : "ignored");

  last_report_arrival_ = now;
  if (!out.processed) return;

  last_acked_high_ = ext_highest;
  last_report_ts_ = report.report_ts;
  media_bytes_interval_ = 0;
  media_count_interval_ = 0;
  fec_bytes_interval_ = 0;
  sent_history_.erase(sent_history_.begin(),
                      sent_history_.lower_bound(ext_highest - 4096));

  apply_decision(out.decision);
  emit_state_events(out.decision);
}

void MediaSender::apply_decision(const ControllerDecision& decision) {
  media_rate_ = std::max(decision.target_media_rate, config_.min_rate);
  fec_interval_ = decision.fec_interval;
  if (decision.fec_enabled != fec_enabled_) {
    fec_enabled_ = decision.fec_enabled;
    fec_block_.clear();  // a half-assembled block never produces parity
  }
}

void MediaSender::emit_state_events(const ControllerDecision& decision) {
  const SimTime now = loop_.now();
  trace_.add(now, TraceEventKind::State, flow_name_, 0, 0, to_string(decision.new_state));
  trace_.add(now, TraceEventKind::Rate, flow_name_, 0, 0,
             std::to_string(decision.target_media_rate.bps));
}

void MediaSender::arm_watchdog() {
  const std::uint64_t generation = ++watchdog_generation_;
  loop_.at(last_feedback_at_ + FbraController::kFeedbackTimeout, [this, generation] {
    if (generation != watchdog_generation_) return;
    if (stream_end_.has_value() && loop_.now() >= *stream_end_) return;
    const auto decision = controller_.on_feedback_timeout(loop_.now());
    apply_decision(decision);
    emit_state_events(decision);
    last_feedback_at_ = loop_.now();
    arm_watchdog();
  });
}

MediaReceiver::MediaReceiver(EventLoop& loop, int flow, std::string flow_name, SimTrace& trace,
                             ReceiverConfig config, Send send_report)
    : loop_(loop),
      flow_(flow),
      flow_name_(std::move(flow_name)),
      trace_(trace),
      config_(config),
      send_report_(std::move(send_report)),
      regulars_since_early_(config.early_budget_regular_reports) {}

std::optional<PacketDisposition> MediaReceiver::disposition(std::int64_t ext_seq) const {
  auto it = dispositions_.find(ext_seq);
  if (it == dispositions_.end()) return std::nullopt;
  return it->second;
}

Duration MediaReceiver::rtt_estimate() const { return 2 * smoothed_owd_; }

Duration MediaReceiver::report_interval() const {
  return std::max(config_.rtcp_interval_factor * rtt_estimate(), config_.min_rtcp_interval);
}

std::int64_t MediaReceiver::unwrap(Seq s) const {
  if (ext_highest_ < 0) return static_cast<std::int64_t>(s);
  return unwrap_seq(s, ext_highest_);
}

void MediaReceiver::schedule_report(Duration in) {
  const std::uint64_t generation = ++timer_generation_;
  loop_.after(in, [this, generation] {
    if (generation != timer_generation_) return;
    send_report(false);
    schedule_report(report_interval());
  });
}

void MediaReceiver::on_media(const MediaPacket& pkt, int wire_size) {
  const SimTime now = loop_.now();
  const Duration owd = now - pkt.send_ts;
  const std::int64_t ext = unwrap(pkt.seq);

  trace_.add(now, TraceEventKind::Recv, flow_name_, ext, wire_size, std::to_string(owd));

  // RFC 3550 interarrival jitter over fragment-level transit times
  if (last_arrival_.has_value()) {
    const Duration d = (now - *last_arrival_) - (pkt.send_ts - last_send_ts_);
    jitter_ += (std::abs(d) - jitter_) / 16;
  }
  last_arrival_ = now;
  last_send_ts_ = pkt.send_ts;
  last_pkt_arrival_ = now;
  last_owd_ = owd;
  smoothed_owd_ = smoothed_owd_ == 0 ? owd : (9 * smoothed_owd_ + owd) / 10;
  ++interval_received_;

  int revealed_gap = 0;
  if (ext_highest_ >= 0 && ext > ext_highest_) {
    for (std::int64_t missing = ext_highest_ + 1; missing < ext; ++missing) {
      if (!dispositions_.contains(missing)) {
        pending_gaps_[missing] = {now, pkt.send_ts};
        ++revealed_gap;
      }
    }
  }
  ext_highest_ = std::max(ext_highest_, ext);
  cache_[ext] = pkt;

  if (owd > config_.delay_max) {
    dispositions_[ext] = PacketDisposition::DiscardedLate;
    discard_events_.push_back({pkt.seq, now});
    trace_.add(now, TraceEventKind::Discard, flow_name_, ext, wire_size, std::to_string(owd));
  } else {
    dispositions_[ext] = PacketDisposition::Played;
  }

  finalize_gaps();
  prune();

  if (!timer_started_) {
    timer_started_ = true;
    schedule_report(report_interval());
  }

  maybe_trigger_early(owd, revealed_gap);
}

void MediaReceiver::note_loss(std::int64_t ext_seq) {
  dispositions_[ext_seq] = PacketDisposition::Lost;
  ++cumulative_lost_;
  loss_events_.push_back({static_cast<Seq>(ext_seq & 0xffff), loop_.now()});
  trace_.add(loop_.now(), TraceEventKind::Loss, flow_name_, ext_seq, 0, "");
}

void MediaReceiver::finalize_gaps() {
  const SimTime now = loop_.now();
  for (auto it = pending_gaps_.begin(); it != pending_gaps_.end();) {
    const std::int64_t seq = it->first;
    const bool far_behind = ext_highest_ - seq >= config_.loss_finalize_gap;
    const bool deadline_passed = now > it->second.reveal_send_ts + config_.delay_max;
    if (far_behind || deadline_passed) {
      if (!dispositions_.contains(seq)) note_loss(seq);
      it = pending_gaps_.erase(it);
    } else {
      ++it;
    }
  }
}

void MediaReceiver::on_fec(const FecPacket& fec) {
  const SimTime now = loop_.now();
  const std::int64_t ext_base = unwrap(fec.base_seq);

  FecBlockState state;
  state.base_seq = fec.base_seq;
  state.block_len = fec.block_len;
  state.fec = fec;
  state.deadline = fec.send_ts + config_.delay_max;
  for (int i = 0; i < fec.block_len; ++i) {
    auto it = cache_.find(ext_base + i);
    if (it != cache_.end()) {
      state.received.emplace(it->second.seq, it->second);
      // conservative deadline: the missing packet was sent no later than the
      // newest covered packet we hold
      state.deadline = std::max(state.deadline, it->second.send_ts + config_.delay_max);
    }
  }

  auto rebuilt = try_recover(state, now);
  if (!rebuilt.has_value()) return;

  const std::int64_t ext = ext_base + seq_distance(fec.base_seq, rebuilt->seq);
  auto dispo = dispositions_.find(ext);
  if (dispo != dispositions_.end() && dispo->second != PacketDisposition::Lost) {
    return;  // arrived meanwhile (played or discarded); nothing to repair
  }
  if (dispo == dispositions_.end()) {
    // the parity packet itself is the first evidence the packet is gone
    pending_gaps_.erase(ext);
    note_loss(ext);
  }
  dispositions_[ext] = PacketDisposition::Recovered;
  trace_.add(now, TraceEventKind::Recovered, flow_name_, ext,
             rebuilt->payload_size() + kMediaHeaderBytes, "");
}

void MediaReceiver::maybe_trigger_early(Duration owd, int burst_len) {
  const bool deadline_close = 10 * owd > 9 * config_.delay_max;
  const bool burst = burst_len >= config_.loss_burst_trigger;
  if (!deadline_close && !burst) return;
  if (!timer_started_) return;
  if (regulars_since_early_ < config_.early_budget_regular_reports) return;

  regulars_since_early_ = 0;
  send_report(true);
  schedule_report(report_interval());  // restart the regular cadence
}

void MediaReceiver::send_report(bool early) {
  const SimTime now = loop_.now();
  finalize_gaps();

  FeedbackReport report;
  report.report_ts = now;
  report.highest_seq = static_cast<Seq>(ext_highest_ < 0 ? 0 : ext_highest_ & 0xffff);
  report.cumulative_lost = cumulative_lost_;
  report.interval_sent = interval_received_;
  report.loss_events = std::move(loss_events_);
  report.discard_events = std::move(discard_events_);
  report.owd_sample = last_owd_;
  report.jitter = jitter_;
  report.lsr = last_send_ts_;
  report.dlsr = now - last_pkt_arrival_;
  report.is_early = early;

  loss_events_.clear();
  discard_events_.clear();
  interval_received_ = 0;
  if (!early) ++regulars_since_early_;

  const int wire = report.size_bytes();
  trace_.add(now, TraceEventKind::RtcpSent, flow_name_, report_count_, wire,
             early ? "early" : "");
  ++report_count_;

  auto pkt = std::make_shared<SimPacket>();
  pkt->kind = SimPacket::Kind::Rtcp;
  pkt->flow = flow_;
  pkt->size_bytes = wire;
  pkt->body = std::move(report);
  send_report_(std::move(pkt));
}

void MediaReceiver::prune() {
  // parity blocks span at most 14 packets and arrive right behind them
  cache_.erase(cache_.begin(), cache_.lower_bound(ext_highest_ - 128));
  if (dispositions_.size() > 8192) {
    dispositions_.erase(dispositions_.begin(), dispositions_.lower_bound(ext_highest_ - 4096));
  }
}

}  // namespace fbra
