#include "fbra/link.hpp"

#include <utility>

namespace fbra {

Link::Link(EventLoop& loop, BitRate capacity, Duration propagation_delay, int queue_limit,
           Deliver deliver)
    : Link(
          loop, [capacity](SimTime) { return capacity; }, propagation_delay, queue_limit,
          std::move(deliver)) {}

Link::Link(EventLoop& loop, CapacityFn capacity, Duration propagation_delay, int queue_limit,
           Deliver deliver)
    : loop_(loop),
      capacity_(std::move(capacity)),
      propagation_(propagation_delay),
      queue_limit_(queue_limit),
      deliver_(std::move(deliver)) {}

void Link::transmit(PacketPtr pkt) {
  if (busy_) {
    if (static_cast<int>(queue_.size()) >= queue_limit_) {
      ++dropped_;
      return;
    }
    queue_.push_back(std::move(pkt));
    return;
  }
  start_service(std::move(pkt));
}

void Link::start_service(PacketPtr pkt) {
  busy_ = true;
  const BitRate rate = capacity_(loop_.now());
  const std::int64_t bits = static_cast<std::int64_t>(pkt->size_bytes) * 8;
  // round the serialization time up so a packet never finishes early
  const Duration serialization =
      rate.bps > 0 ? (bits * kSecond + rate.bps - 1) / rate.bps : kSecond;

  loop_.after(serialization, [this, pkt]() mutable {
    ++delivered_;
    loop_.after(propagation_, [this, pkt]() mutable { deliver_(std::move(pkt)); });
    if (queue_.empty()) {
      busy_ = false;
    } else {
      PacketPtr next = std::move(queue_.front());
      queue_.pop_front();
      start_service(std::move(next));
    }
  });
}

}  // namespace fbra
