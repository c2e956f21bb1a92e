#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fbra/time.hpp"

namespace fbra {

enum class TraceEventKind {
  SendRtp,
  SendFec,
  Recv,
  Loss,
  Discard,
  Recovered,
  RtcpSent,
  RtcpRecv,
  State,
  Rate,
};

const char* to_string(TraceEventKind kind);
TraceEventKind trace_event_kind_from_string(const std::string& s);

struct TraceEvent {
  SimTime at;
  TraceEventKind kind = TraceEventKind::SendRtp;
  std::string flow;
  std::int64_t seq = 0;
  std::int64_t size_bytes = 0;
  std::string extra;

  bool operator==(const TraceEvent&) const = default;
};

// Timestamped record of everything the endpoints and controller did; the sole
// input to the metrics module.
struct SimTrace {
  Duration duration = 0;
  std::vector<TraceEvent> events;

  void add(SimTime at, TraceEventKind kind, std::string flow, std::int64_t seq,
           std::int64_t size_bytes, std::string extra = {});
};

// CSV format, one event per line:
//   time_us,event_kind,flow_id,seq,size_bytes,extra
// preceded by a schema line and a duration line.
void write_trace_csv(const SimTrace& trace, std::ostream& out);
void write_trace_csv(const SimTrace& trace, const std::string& path);
SimTrace read_trace_csv(std::istream& in);
SimTrace read_trace_csv_file(const std::string& path);

}  // namespace fbra
