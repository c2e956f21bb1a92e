#include "fbra/packets.hpp"

#include <cstring>

#include "fbra/errors.hpp"

namespace fbra {

bool seq_after(Seq a, Seq b) {
  const std::uint16_t d = static_cast<std::uint16_t>(a - b);
  return d != 0 && d < 0x8000;
}

int seq_distance(Seq from, Seq to) {
  return static_cast<std::uint16_t>(to - from);
}

std::int64_t unwrap_seq(Seq s, std::int64_t reference) {
  const Seq ref16 = static_cast<Seq>(reference & 0xffff);
  const int diff = ((static_cast<int>(s) - static_cast<int>(ref16) + 0x8000) & 0xffff) - 0x8000;
  return reference + diff;
}

SeqWindow::SeqWindow(int capacity) : capacity_(capacity), bits_(capacity, false) {}

void SeqWindow::mark_received(Seq s) {
  if (!started_) {
    started_ = true;
    highest_ = s;
    bits_[s % capacity_] = true;
    return;
  }
  if (seq_after(s, highest_)) {
    // Clear the ring between the old and new highest before reusing slots.
    int steps = seq_distance(highest_, s);
    for (int i = 1; i <= steps && i < capacity_; ++i) {
      bits_[static_cast<Seq>(highest_ + i) % capacity_] = false;
    }
    highest_ = s;
  }
  if (seq_distance(s, highest_) < capacity_) {
    bits_[s % capacity_] = true;
  }
}

bool SeqWindow::is_received(Seq s) const {
  if (!started_) return false;
  if (seq_after(s, highest_)) return false;
  if (seq_distance(s, highest_) >= capacity_) return true;  // too old to track
  return bits_[s % capacity_];
}

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(v & 0xff);
    u8(v >> 8);
  }
  void u32(std::uint32_t v) {
    u16(v & 0xffff);
    u16(v >> 16);
  }
  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v));
    u32(static_cast<std::uint32_t>(v >> 32));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    if (pos_ >= in_.size()) throw ParseError("truncated packet");
    return in_[pos_++];
  }
  std::uint16_t u16() {
    std::uint16_t lo = u8(), hi = u8();
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }
  std::uint32_t u32() {
    std::uint32_t lo = u16(), hi = u16();
    return lo | (hi << 16);
  }
  std::uint64_t u64() {
    std::uint64_t lo = u32(), hi = u32();
    return lo | (hi << 32);
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    if (pos_ + n > in_.size()) throw ParseError("truncated packet");
    std::vector<std::uint8_t> out(in_.begin() + pos_, in_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  void expect_end() const {
    if (pos_ != in_.size()) throw ParseError("trailing bytes");
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

constexpr std::uint8_t kMediaTag = 1;
constexpr std::uint8_t kFecTag = 2;
constexpr std::uint8_t kReportTag = 3;

// Events are written as runs of consecutive seqs (RLE at the wire boundary)
// while the per-event times ride along after each run header.
void write_events(ByteWriter& w, const std::vector<ReportedEvent>& events) {
  std::size_t i = 0;
  std::uint16_t runs = 0;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (start, len)
  while (i < events.size()) {
    std::size_t j = i + 1;
    while (j < events.size() &&
           events[j].seq == static_cast<Seq>(events[j - 1].seq + 1)) {
      ++j;
    }
    spans.emplace_back(i, j - i);
    ++runs;
    i = j;
  }
  w.u16(runs);
  for (auto [start, len] : spans) {
    w.u16(events[start].seq);
    w.u16(static_cast<std::uint16_t>(len));
    for (std::size_t k = start; k < start + len; ++k) {
      w.i64(events[k].at.us);
    }
  }
}

std::vector<ReportedEvent> read_events(ByteReader& r) {
  std::vector<ReportedEvent> out;
  const std::uint16_t runs = r.u16();
  for (std::uint16_t n = 0; n < runs; ++n) {
    const Seq base = r.u16();
    const std::uint16_t len = r.u16();
    for (std::uint16_t k = 0; k < len; ++k) {
      out.push_back({static_cast<Seq>(base + k), SimTime{r.i64()}});
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize(const MediaPacket& p) {
  ByteWriter w;
  w.u8(kMediaTag);
  w.u32(p.ssrc);
  w.u16(p.seq);
  w.i64(p.frame_id);
  w.i64(p.frame_ts.us);
  w.i64(p.send_ts.us);
  w.u16(static_cast<std::uint16_t>(p.header_size));
  w.u8(p.is_fragment ? 1 : 0);
  w.u16(static_cast<std::uint16_t>(p.fragment_index));
  w.u16(static_cast<std::uint16_t>(p.fragment_count));
  w.u32(static_cast<std::uint32_t>(p.payload.size()));
  w.bytes(p.payload);
  return w.take();
}

MediaPacket parse_media_packet(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u8() != kMediaTag) throw ParseError("not a media packet");
  MediaPacket p;
  p.ssrc = r.u32();
  p.seq = r.u16();
  p.frame_id = r.i64();
  p.frame_ts = SimTime{r.i64()};
  p.send_ts = SimTime{r.i64()};
  p.header_size = r.u16();
  p.is_fragment = r.u8() != 0;
  p.fragment_index = r.u16();
  p.fragment_count = r.u16();
  const auto n = r.u32();
  p.payload = r.bytes(n);
  r.expect_end();
  return p;
}

std::vector<std::uint8_t> serialize(const FecPacket& p) {
  ByteWriter w;
  w.u8(kFecTag);
  w.u32(p.ssrc);
  w.u16(p.base_seq);
  w.u8(static_cast<std::uint8_t>(p.block_len));
  w.u32(p.length_field);
  w.i64(p.send_ts.us);
  w.u32(static_cast<std::uint32_t>(p.parity_payload.size()));
  w.bytes(p.parity_payload);
  return w.take();
}

FecPacket parse_fec_packet(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u8() != kFecTag) throw ParseError("not a fec packet");
  FecPacket p;
  p.ssrc = r.u32();
  p.base_seq = r.u16();
  p.block_len = r.u8();
  p.length_field = r.u32();
  p.send_ts = SimTime{r.i64()};
  const auto n = r.u32();
  p.parity_payload = r.bytes(n);
  r.expect_end();
  return p;
}

std::vector<std::uint8_t> serialize(const FeedbackReport& rr) {
  ByteWriter w;
  w.u8(kReportTag);
  w.i64(rr.report_ts.us);
  w.u16(rr.highest_seq);
  w.i64(rr.cumulative_lost);
  w.u32(static_cast<std::uint32_t>(rr.interval_sent));
  write_events(w, rr.loss_events);
  write_events(w, rr.discard_events);
  w.i64(rr.owd_sample);
  w.i64(rr.jitter);
  w.i64(rr.lsr.us);
  w.i64(rr.dlsr);
  w.u8(rr.is_early ? 1 : 0);
  return w.take();
}

FeedbackReport parse_feedback_report(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u8() != kReportTag) throw ParseError("not a feedback report");
  FeedbackReport rr;
  rr.report_ts = SimTime{r.i64()};
  rr.highest_seq = r.u16();
  rr.cumulative_lost = r.i64();
  rr.interval_sent = static_cast<int>(r.u32());
  rr.loss_events = read_events(r);
  rr.discard_events = read_events(r);
  rr.owd_sample = r.i64();
  rr.jitter = r.i64();
  rr.lsr = SimTime{r.i64()};
  rr.dlsr = r.i64();
  rr.is_early = r.u8() != 0;
  r.expect_end();
  return rr;
}

int FeedbackReport::size_bytes() const {
  return static_cast<int>(serialize(*this).size());
}

}  // namespace fbra
