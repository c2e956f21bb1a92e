#pragma once

#include <map>
#include <optional>
#include <span>

#include "fbra/packets.hpp"
#include "fbra/time.hpp"

namespace fbra {

// XOR parity over 2..14 media packets with consecutive sequence numbers.
// Shorter payloads are zero-padded; length_field carries the XOR of the
// covered payload lengths so a single missing length can be reconstructed.
FecPacket encode_block(std::span<const MediaPacket> packets);

// Receiver-side bookkeeping for one parity block. `deadline` is the cutoff
// past which a reconstruction can no longer reach the playout buffer.
struct FecBlockState {
  Seq base_seq = 0;
  int block_len = 0;
  std::map<Seq, MediaPacket> received;
  std::optional<FecPacket> fec;
  SimTime deadline;

  bool covers(Seq s) const {
    int d = seq_distance(base_seq, s);
    return d >= 0 && d < block_len;
  }
};

// Rebuilds the single missing packet of the block, or nothing: parity cannot
// repair two erasures, a complete block needs no repair, and a reconstruction
// after `deadline` would be discarded anyway.
std::optional<MediaPacket> try_recover(const FecBlockState& state, SimTime now);

// Rate of one parity packet per `fec_interval` media packets at the current
// average packet size.
BitRate fec_bitrate(BitRate media_rate, int fec_interval, int avg_packet_size_bytes);

}  // namespace fbra
