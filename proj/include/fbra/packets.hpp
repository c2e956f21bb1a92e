#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fbra/time.hpp"

namespace fbra {

using Seq = std::uint16_t;

// 16-bit wraparound ordering: a follows b iff (a - b) mod 2^16 lies in (0, 32768).
bool seq_after(Seq a, Seq b);

// Steps forward (mod 2^16) from `from` to reach `to`.
int seq_distance(Seq from, Seq to);

// Extended sequence number closest to `reference` whose low 16 bits equal `s`.
std::int64_t unwrap_seq(Seq s, std::int64_t reference);

constexpr int kMediaHeaderBytes = 12;
constexpr int kFecHeaderBytes = 16;
constexpr int kMtu = 1500;
constexpr int kMaxMediaPayload = kMtu - kMediaHeaderBytes;

// One parity packet covers between 2 and 14 media packets.
constexpr int kMinFecInterval = 2;
constexpr int kMaxFecInterval = 14;

struct MediaPacket {
  std::uint32_t ssrc = 0;
  Seq seq = 0;
  std::int64_t frame_id = 0;
  SimTime frame_ts;  // capture time
  SimTime send_ts;
  std::vector<std::uint8_t> payload;
  int header_size = kMediaHeaderBytes;
  bool is_fragment = false;
  int fragment_index = 0;
  int fragment_count = 1;

  int payload_size() const { return static_cast<int>(payload.size()); }
  int size_bytes() const { return payload_size() + header_size; }

  bool operator==(const MediaPacket&) const = default;
};

// Parity over a block of consecutive media packets. The parity payload is as
// long as the largest covered payload; length_field is the XOR of the covered
// payload lengths so the receiver can size the reconstructed packet.
struct FecPacket {
  std::uint32_t ssrc = 0;
  Seq base_seq = 0;
  int block_len = 0;
  std::vector<std::uint8_t> parity_payload;
  std::uint32_t length_field = 0;
  SimTime send_ts;

  int size_bytes() const { return static_cast<int>(parity_payload.size()) + kFecHeaderBytes; }

  bool operator==(const FecPacket&) const = default;
};

struct ReportedEvent {
  Seq seq = 0;
  SimTime at;  // receiver clock, inside the interval the report closes

  bool operator==(const ReportedEvent&) const = default;
};

struct FeedbackReport {
  SimTime report_ts;  // send time at the receiver
  Seq highest_seq = 0;
  std::int64_t cumulative_lost = 0;
  int interval_sent = 0;  // media packets observed in the interval
  std::vector<ReportedEvent> loss_events;
  std::vector<ReportedEvent> discard_events;
  Duration owd_sample = 0;  // most recent media packet's one-way delay
  Duration jitter = 0;      // interarrival jitter, microseconds
  SimTime lsr;              // send_ts of the newest media packet seen
  Duration dlsr = 0;        // report_ts minus that packet's arrival
  bool is_early = false;

  bool clean() const { return loss_events.empty() && discard_events.empty(); }
  int size_bytes() const;

  bool operator==(const FeedbackReport&) const = default;
};

// Sliding received-set over wraparound sequence numbers. The window follows
// the highest sequence marked; anything older than `capacity` behind it is
// forgotten and treated as received.
class SeqWindow {
 public:
  explicit SeqWindow(int capacity = 1024);

  void mark_received(Seq s);
  bool is_received(Seq s) const;
  bool started() const { return started_; }
  Seq highest() const { return highest_; }

 private:
  int capacity_;
  Seq highest_ = 0;
  bool started_ = false;
  std::vector<bool> bits_;  // ring indexed by seq % capacity
};

// Binary wire formats, little endian. Report event lists are stored as runs
// of consecutive sequence numbers, each run followed by its per-event times.
std::vector<std::uint8_t> serialize(const MediaPacket& p);
std::vector<std::uint8_t> serialize(const FecPacket& p);
std::vector<std::uint8_t> serialize(const FeedbackReport& r);
MediaPacket parse_media_packet(std::span<const std::uint8_t> bytes);
FecPacket parse_fec_packet(std::span<const std::uint8_t> bytes);
FeedbackReport parse_feedback_report(std::span<const std::uint8_t> bytes);

}  // namespace fbra
