#include "fbra/tcp.hpp"

#include <algorithm>
#include <cmath>

namespace fbra {

TcpSender::TcpSender(EventLoop& loop, int flow, std::uint64_t seed, Config config, Send send)
    : loop_(loop),
      flow_(flow),
      config_(config),
      send_(std::move(send)),
      rng_(seed),
      ssthresh_(config.initial_ssthresh_packets) {}

void TcpSender::start() {
  std::uniform_real_distribution<double> stagger(0.0, config_.initial_stagger_seconds);
  const Duration delay =
      static_cast<Duration>(std::llround(stagger(rng_) * static_cast<double>(kSecond)));
  loop_.after(delay, [this] { begin_transfer(); });
}

void TcpSender::begin_transfer() {
  ++transfer_id_;
  if (config_.fixed_file_bytes.has_value()) {
    file_bytes_ = *config_.fixed_file_bytes;
  } else {
    std::uniform_int_distribution<std::int64_t> size(config_.min_file_bytes,
                                                     config_.max_file_bytes);
    file_bytes_ = size(rng_);
  }
  snd_una_ = 0;
  snd_nxt_ = 0;
  recovery_until_ = 0;
  cwnd_ = 1.0;
  ssthresh_ = config_.initial_ssthresh_packets;
  dup_acks_ = 0;
  active_ = true;
  arm_rto();
  maybe_send();
}

void TcpSender::schedule_next_transfer() {
  active_ = false;
  ++rto_generation_;  // cancel any pending timer
  if (config_.mean_idle_seconds <= 0.0) {
    loop_.after(1, [this] { begin_transfer(); });
    return;
  }
  std::exponential_distribution<double> idle(1.0 / config_.mean_idle_seconds);
  const Duration delay =
      static_cast<Duration>(std::llround(idle(rng_) * static_cast<double>(kSecond))) + 1;
  loop_.after(delay, [this] { begin_transfer(); });
}

void TcpSender::maybe_send() {
  const std::int64_t window_bytes =
      static_cast<std::int64_t>(cwnd_ * static_cast<double>(config_.mss));
  while (snd_nxt_ < file_bytes_ && snd_nxt_ - snd_una_ < window_bytes) {
    const int payload =
        static_cast<int>(std::min<std::int64_t>(config_.mss, file_bytes_ - snd_nxt_));
    auto pkt = std::make_shared<SimPacket>();
    pkt->kind = SimPacket::Kind::TcpData;
    pkt->flow = flow_;
    pkt->size_bytes = payload + config_.header_bytes;
    TcpSegment seg;
    seg.offset = snd_nxt_;
    seg.payload = payload;
    seg.transfer_id = transfer_id_;
    seg.echo_ts = loop_.now();
    seg.remaining_after = file_bytes_ - (snd_nxt_ + payload);
    pkt->body = seg;
    snd_nxt_ += payload;
    send_(std::move(pkt));
  }
}

Duration TcpSender::rto() const {
  return std::max(config_.min_rto, 2 * srtt_);
}

void TcpSender::arm_rto() {
  const std::uint64_t generation = ++rto_generation_;
  loop_.after(rto(), [this, generation] { on_rto(generation); });
}

void TcpSender::on_rto(std::uint64_t generation) {
  if (generation != rto_generation_ || !active_) return;
  on_drop_signal();
  arm_rto();
}

void TcpSender::on_drop_signal() {
  recovery_until_ = snd_nxt_;
  ssthresh_ = std::max(cwnd_ / 2.0, 2.0);
  cwnd_ = 1.0;
  snd_nxt_ = snd_una_;  // go-back-N
  dup_acks_ = 0;
  maybe_send();
}

void TcpSender::on_ack(const TcpSegment& ack) {
  if (!active_ || ack.transfer_id != transfer_id_) return;

  if (ack.ack > snd_una_) {
    const std::int64_t newly = ack.ack - snd_una_;
    snd_una_ = ack.ack;
    bytes_acked_total_ += newly;
    dup_acks_ = 0;

    const Duration sample = loop_.now() - ack.echo_ts;
    srtt_ = srtt_ == 0 ? sample : (7 * srtt_ + sample) / 8;

    const double acked_packets = static_cast<double>(newly) / config_.mss;
    if (cwnd_ < ssthresh_) {
      cwnd_ += acked_packets;  // slow start: doubles every RTT
    } else {
      cwnd_ += acked_packets / cwnd_;  // additive increase: one MSS per RTT
    }

    if (snd_una_ >= file_bytes_) {
      ++transfers_completed_;
      schedule_next_transfer();
      return;
    }
    arm_rto();
    maybe_send();
    return;
  }

  if (ack.ack == snd_una_) {
    ++dup_acks_;
    if (dup_acks_ >= 3) {
      dup_acks_ = 0;
      // the long duplicate-ack train after one loss signals that same loss;
      // only react once per recovery episode
      if (snd_una_ >= recovery_until_) {
        on_drop_signal();
        arm_rto();
      }
    }
  }
}

TcpSink::TcpSink(EventLoop& loop, int flow, std::string flow_name, SimTrace& trace,
                 Send send_ack)
    : loop_(loop),
      flow_(flow),
      flow_name_(std::move(flow_name)),
      trace_(trace),
      send_ack_(std::move(send_ack)) {}

void TcpSink::on_data(const TcpSegment& seg, int wire_size) {
  if (seg.transfer_id != transfer_id_) {
    transfer_id_ = seg.transfer_id;
    rcv_nxt_ = 0;
  }
  if (seg.offset == rcv_nxt_) {
    rcv_nxt_ += seg.payload;
    trace_.add(loop_.now(), TraceEventKind::Recv, flow_name_, seg.offset, wire_size,
               std::to_string(seg.remaining_after));
  }
  // out-of-order data is dropped; the repeated cumulative ack signals the gap
  auto pkt = std::make_shared<SimPacket>();
  pkt->kind = SimPacket::Kind::TcpAck;
  pkt->flow = flow_;
  pkt->size_bytes = 40;
  TcpSegment ack;
  ack.is_ack = true;
  ack.ack = rcv_nxt_;
  ack.transfer_id = seg.transfer_id;
  ack.echo_ts = seg.echo_ts;
  pkt->body = ack;
  send_ack_(std::move(pkt));
}

}  // namespace fbra
