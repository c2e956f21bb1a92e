#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <variant>

#include "fbra/event_loop.hpp"
#include "fbra/packets.hpp"
#include "fbra/time.hpp"

namespace fbra {

struct TcpSegment {
  std::int64_t offset = 0;  // first payload byte of the file
  int payload = 0;
  bool is_ack = false;
  std::int64_t ack = 0;  // cumulative, next expected byte
  std::int64_t transfer_id = 0;
  SimTime echo_ts;                  // send time echoed by the ACK, for RTT
  std::int64_t remaining_after = 0;  // file bytes left past this segment
};

struct SimPacket {
  enum class Kind { Media, Fec, Rtcp, TcpData, TcpAck };

  Kind kind = Kind::Media;
  int flow = 0;
  int size_bytes = 0;
  std::variant<MediaPacket, FecPacket, FeedbackReport, TcpSegment> body;
};

using PacketPtr = std::shared_ptr<SimPacket>;

// One direction of a duplex link: a drop-tail FIFO of at most `queue_limit`
// waiting packets in front of a serializing transmitter. Capacity is sampled
// when a packet enters service, so capacity steps take effect at packet
// boundaries.
class Link {
 public:
  using Deliver = std::function<void(PacketPtr)>;
  using CapacityFn = std::function<BitRate(SimTime)>;

  Link(EventLoop& loop, BitRate capacity, Duration propagation_delay, int queue_limit,
       Deliver deliver);
  Link(EventLoop& loop, CapacityFn capacity, Duration propagation_delay, int queue_limit,
       Deliver deliver);

  // Drop-tail: a packet arriving at a full queue vanishes.
  void transmit(PacketPtr pkt);

  std::int64_t delivered() const { return delivered_; }
  std::int64_t dropped() const { return dropped_; }
  std::size_t queue_depth() const { return queue_.size(); }

 private:
  EventLoop& loop_;
  CapacityFn capacity_;
  Duration propagation_;
  int queue_limit_;
  Deliver deliver_;

  std::deque<PacketPtr> queue_;
  bool busy_ = false;
  std::int64_t delivered_ = 0;
  std::int64_t dropped_ = 0;

  void start_service(PacketPtr pkt);
};

}  // namespace fbra
