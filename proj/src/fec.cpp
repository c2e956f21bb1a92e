#include "fbra/fec.hpp"

#include <algorithm>

#include "fbra/errors.hpp"

namespace fbra {

FecPacket encode_block(std::span<const MediaPacket> packets) {
  const int n = static_cast<int>(packets.size());
  if (n < kMinFecInterval || n > kMaxFecInterval) {
    throw BlockLengthOutOfRange("fec block length must be in [2,14], got " +
                                std::to_string(n));
  }
  for (int i = 1; i < n; ++i) {
    if (packets[i].seq != static_cast<Seq>(packets[i - 1].seq + 1)) {
      throw NonConsecutiveSequence("fec block requires consecutive sequence numbers");
    }
  }

  FecPacket fec;
  fec.ssrc = packets.front().ssrc;
  fec.base_seq = packets.front().seq;
  fec.block_len = n;

  std::size_t max_len = 0;
  for (const auto& p : packets) max_len = std::max(max_len, p.payload.size());
  fec.parity_payload.assign(max_len, 0);
  for (const auto& p : packets) {
    fec.length_field ^= static_cast<std::uint32_t>(p.payload.size());
    for (std::size_t i = 0; i < p.payload.size(); ++i) {
      fec.parity_payload[i] ^= p.payload[i];
    }
  }
  return fec;
}

std::optional<MediaPacket> try_recover(const FecBlockState& state, SimTime now) {
  if (!state.fec.has_value()) return std::nullopt;
  if (now > state.deadline) return std::nullopt;

  std::optional<Seq> missing;
  for (int i = 0; i < state.block_len; ++i) {
    const Seq s = static_cast<Seq>(state.base_seq + i);
    if (!state.received.contains(s)) {
      if (missing.has_value()) return std::nullopt;  // two erasures, unrecoverable
      missing = s;
    }
  }
  if (!missing.has_value()) return std::nullopt;

  const FecPacket& fec = *state.fec;
  std::vector<std::uint8_t> payload = fec.parity_payload;
  std::uint32_t length = fec.length_field;
  for (const auto& [seq, pkt] : state.received) {
    length ^= static_cast<std::uint32_t>(pkt.payload.size());
    for (std::size_t i = 0; i < pkt.payload.size() && i < payload.size(); ++i) {
      payload[i] ^= pkt.payload[i];
    }
  }
  if (length > payload.size()) return std::nullopt;  // corrupt block state
  payload.resize(length);

  MediaPacket rebuilt;
  rebuilt.ssrc = fec.ssrc;
  rebuilt.seq = *missing;
  rebuilt.frame_id = -1;  // unknown to the receiver; the trace keeps the mapping
  rebuilt.send_ts = fec.send_ts;
  rebuilt.frame_ts = fec.send_ts;
  rebuilt.payload = std::move(payload);
  return rebuilt;
}

BitRate fec_bitrate(BitRate media_rate, int fec_interval, int avg_packet_size_bytes) {
  if (fec_interval < kMinFecInterval || fec_interval > kMaxFecInterval) {
    throw IntervalOutOfRange("fec interval must be in [2,14], got " +
                             std::to_string(fec_interval));
  }
  if (avg_packet_size_bytes <= 0) {
    throw IntervalOutOfRange("average packet size must be positive");
  }
  // One parity of (avg + header) bytes per fec_interval media packets.
  const std::int64_t num = media_rate.bps *
                           (avg_packet_size_bytes + kFecHeaderBytes);
  const std::int64_t den = static_cast<std::int64_t>(fec_interval) * avg_packet_size_bytes;
  return BitRate{num / den};
}

}  // namespace fbra
