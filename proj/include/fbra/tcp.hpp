#pragma once

#include <functional>
#include <optional>
#include <random>

#include "fbra/event_loop.hpp"
#include "fbra/link.hpp"
#include "fbra/trace.hpp"

namespace fbra {

// On-off elastic cross traffic: a sequence of file downloads separated by
// idle periods, driven by a timeout-style AIMD window (slow start to
// ssthresh, additive increase after, cwnd back to 1 on any drop signal).
class TcpSender {
 public:
  struct Config {
    int mss = 1460;        // payload bytes per segment
    int header_bytes = 40; // wire size = mss + header
    std::int64_t min_file_bytes = 100'000;
    std::int64_t max_file_bytes = 1'500'000;
    double mean_idle_seconds = 10.0;
    double initial_stagger_seconds = 5.0;  // first transfer starts within this
    double initial_ssthresh_packets = 16.0;
    Duration min_rto = 200 * kMillisecond;
    std::optional<std::int64_t> fixed_file_bytes;  // calibration runs
  };

  using Send = std::function<void(PacketPtr)>;

  TcpSender(EventLoop& loop, int flow, std::uint64_t seed, Config config, Send send);

  void start();
  void on_ack(const TcpSegment& ack);

  std::int64_t transfers_completed() const { return transfers_completed_; }
  std::int64_t bytes_acked_total() const { return bytes_acked_total_; }
  bool transfer_active() const { return active_; }

 private:
  EventLoop& loop_;
  int flow_;
  Config config_;
  Send send_;
  std::mt19937_64 rng_;

  bool active_ = false;
  std::int64_t transfer_id_ = 0;
  std::int64_t file_bytes_ = 0;
  std::int64_t snd_una_ = 0;
  std::int64_t snd_nxt_ = 0;
  double cwnd_ = 1.0;      // packets
  double ssthresh_ = 64.0; // packets
  int dup_acks_ = 0;
  Duration srtt_ = 0;
  std::uint64_t rto_generation_ = 0;
  std::int64_t transfers_completed_ = 0;
  std::int64_t recovery_until_ = 0;
  std::int64_t bytes_acked_total_ = 0;

  void begin_transfer();
  void schedule_next_transfer();
  void maybe_send();
  void arm_rto();
  void on_rto(std::uint64_t generation);
  void on_drop_signal();
  Duration rto() const;
};

// Receiving side: acknowledges cumulatively and discards out-of-order data
// (go-back-N), logging every in-order arrival to the trace.
class TcpSink {
 public:
  using Send = std::function<void(PacketPtr)>;

  TcpSink(EventLoop& loop, int flow, std::string flow_name, SimTrace& trace, Send send_ack);

  void on_data(const TcpSegment& seg, int wire_size);

 private:
  EventLoop& loop_;
  int flow_;
  std::string flow_name_;
  SimTrace& trace_;
  Send send_ack_;

  std::int64_t transfer_id_ = -1;
  std::int64_t rcv_nxt_ = 0;
};

}  // namespace fbra
