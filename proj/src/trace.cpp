#include "fbra/trace.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "fbra/errors.hpp"

namespace fbra {

namespace {

constexpr const char* kSchemaLine = "#fbra-trace-v1";
constexpr const char* kHeaderLine = "time_us,event_kind,flow_id,seq,size_bytes,extra";

constexpr std::array<const char*, 10> kKindNames = {
    "SEND_RTP", "SEND_FEC", "RECV",      "LOSS",  "DISCARD",
    "RECOVERED", "RTCP_SENT", "RTCP_RECV", "STATE", "RATE",
};

}  // namespace

const char* to_string(TraceEventKind kind) {
  return kKindNames[static_cast<int>(kind)];
}

TraceEventKind trace_event_kind_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (s == kKindNames[i]) return static_cast<TraceEventKind>(i);
  }
  throw ParseError("unknown trace event kind: " + s);
}

void SimTrace::add(SimTime at, TraceEventKind kind, std::string flow, std::int64_t seq,
                   std::int64_t size_bytes, std::string extra) {
  events.push_back({at, kind, std::move(flow), seq, size_bytes, std::move(extra)});
}

void write_trace_csv(const SimTrace& trace, std::ostream& out) {
  out << kSchemaLine << '\n';
  out << "#duration_us=" << trace.duration << '\n';
  out << kHeaderLine << '\n';
  for (const auto& e : trace.events) {
    out << e.at.us << ',' << to_string(e.kind) << ',' << e.flow << ',' << e.seq << ','
        << e.size_bytes << ',' << e.extra << '\n';
  }
}

void write_trace_csv(const SimTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open trace file for writing: " + path);
  write_trace_csv(trace, out);
}

SimTrace read_trace_csv(std::istream& in) {
  SimTrace trace;
  std::string line;
  if (!std::getline(in, line) || line != kSchemaLine) {
    throw ParseError("missing trace schema line");
  }
  if (!std::getline(in, line) || line.rfind("#duration_us=", 0) != 0) {
    throw ParseError("missing trace duration line");
  }
  trace.duration = std::stoll(line.substr(std::string("#duration_us=").size()));
  if (!std::getline(in, line) || line != kHeaderLine) {
    throw ParseError("missing trace header line");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceEvent e;
    std::size_t pos = 0;
    auto next = [&](bool last = false) {
      std::size_t comma = last ? std::string::npos : line.find(',', pos);
      std::string field =
          comma == std::string::npos ? line.substr(pos) : line.substr(pos, comma - pos);
      pos = comma == std::string::npos ? line.size() : comma + 1;
      return field;
    };
    e.at = SimTime{std::stoll(next())};
    e.kind = trace_event_kind_from_string(next());
    e.flow = next();
    e.seq = std::stoll(next());
    e.size_bytes = std::stoll(next());
    e.extra = next(true);
    trace.events.push_back(std::move(e));
  }
  return trace;
}

SimTrace read_trace_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  return read_trace_csv(in);
}

}  // namespace fbra
