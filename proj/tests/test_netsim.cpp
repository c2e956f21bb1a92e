#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <sstream>
#include <vector>

#include "fbra/errors.hpp"
#include "fbra/event_loop.hpp"
#include "fbra/link.hpp"
#include "fbra/scenario.hpp"
#include "fbra/tcp.hpp"
#include "fbra/trace.hpp"

using namespace fbra;

namespace {

PacketPtr dummy_packet(int flow, int size) {
  auto p = std::make_shared<SimPacket>();
  p->kind = SimPacket::Kind::Media;
  p->flow = flow;
  p->size_bytes = size;
  return p;
}

}  // namespace

TEST_CASE("event loop executes ties in insertion order") {
  EventLoop loop;
  std::vector<int> order;
  loop.at(SimTime{100}, [&] { order.push_back(1); });
  loop.at(SimTime{100}, [&] { order.push_back(2); });
  loop.at(SimTime{50}, [&] { order.push_back(0); });
  loop.run_until(SimTime{200});
  CHECK(order == std::vector<int>{0, 1, 2});
  CHECK(loop.now() == SimTime{200});
}

TEST_CASE("link delivery time is serialization plus propagation") {
  EventLoop loop;
  std::vector<SimTime> deliveries;
  Link link(loop, kbps(5000), 50 * kMillisecond, 50,
            [&](PacketPtr) { deliveries.push_back(loop.now()); });
  link.transmit(dummy_packet(0, 1500));
  loop.run_until(SimTime{kSecond});
  REQUIRE(deliveries.size() == 1);
  // 1500 B at 5 Mbps = 2.4 ms, plus 50 ms propagation
  CHECK(deliveries[0] == SimTime{2400 + 50'000});
}

TEST_CASE("drop-tail queue holds 50 packets and drops the arrival") {
  EventLoop loop;
  int delivered = 0;
  Link link(loop, kbps(1000), 0, 50, [&](PacketPtr) { ++delivered; });
  // one in service plus 50 queued plus 5 dropped
  for (int i = 0; i < 56; ++i) link.transmit(dummy_packet(0, 1000));
  CHECK(link.dropped() == 5);
  loop.run_until(SimTime{600 * kSecond});
  CHECK(delivered == 51);
  CHECK(link.delivered() == 51);
}

TEST_CASE("per-link packet conservation") {
  EventLoop loop;
  int delivered = 0;
  Link link(loop, kbps(500), 1000, 50, [&](PacketPtr) { ++delivered; });
  for (int i = 0; i < 200; ++i) link.transmit(dummy_packet(0, 1200));
  loop.run_until(SimTime{300 * kMillisecond});  // partial drain
  CHECK(link.delivered() + link.dropped() + static_cast<std::int64_t>(link.queue_depth()) +
            1 >=
        200);  // +1 covers a packet mid-service
  loop.run_until(SimTime{600 * kSecond});
  CHECK(link.delivered() + link.dropped() == 200);
  CHECK(link.queue_depth() == 0);
}

TEST_CASE("links deliver in FIFO order") {
  EventLoop loop;
  std::vector<int> sizes;
  Link link(loop, kbps(1000), 1000, 50,
            [&](PacketPtr p) { sizes.push_back(p->size_bytes); });
  for (int i = 1; i <= 20; ++i) link.transmit(dummy_packet(0, 100 + i));
  loop.run_until(SimTime{60 * kSecond});
  REQUIRE(sizes.size() == 20);
  for (int i = 1; i < 20; ++i) CHECK(sizes[i] > sizes[i - 1]);
}

TEST_CASE("capacity steps take effect at packet-service boundaries") {
  EventLoop loop;
  std::vector<SimTime> deliveries;
  // 100 kbps before t = 50 ms, 200 kbps after
  Link link(
      loop, [](SimTime t) { return t.us < 50'000 ? kbps(100) : kbps(200); }, 0, 50,
      [&](PacketPtr) { deliveries.push_back(loop.now()); });
  link.transmit(dummy_packet(0, 1000));  // enters service at 100 kbps: 80 ms
  link.transmit(dummy_packet(0, 1000));  // starts at 80 ms, new rate: 40 ms more
  loop.run_until(SimTime{kSecond});
  REQUIRE(deliveries.size() == 2);
  CHECK(deliveries[0] == SimTime{80'000});  // old rate holds mid-serialization
  CHECK(deliveries[1] == SimTime{120'000});
}

TEST_CASE("default variable capacity pattern") {
  CHECK(variable_capacity_schedule(SimTime{10 * kSecond}) == kbps(256));
  CHECK(variable_capacity_schedule(SimTime{50 * kSecond}) == kbps(160));
  CHECK(variable_capacity_schedule(SimTime{90 * kSecond}) == kbps(100));
  CHECK(variable_capacity_schedule(SimTime{130 * kSecond}) == kbps(192));
  CHECK(variable_capacity_schedule(SimTime{170 * kSecond}) == kbps(256));  // cycles
  for (Duration t = 0; t < 400 * kSecond; t += kSecond) {
    const BitRate r = variable_capacity_schedule(SimTime{t});
    CHECK(r >= kbps(100));
    CHECK(r <= kbps(256));
  }
}

TEST_CASE("scenario config parsing and validation") {
  const auto sc = parse_scenario_text(
      "topology = rtp_vs_tcp\nbottleneck_delay_ms = 100\nduration_s = 30\nseed = 9\n");
  CHECK(sc.topology == Topology::RtpVsTcp);
  CHECK(sc.bottleneck_delay == 100 * kMillisecond);
  CHECK(sc.rtp_flows == 1);
  CHECK(sc.tcp_flows == 10);
  CHECK(sc.bottleneck_capacity == kbps(5000));
  CHECK(sc.seed == 9);

  CHECK_THROWS_AS(parse_scenario_text("bottleneck_delay_ms = 50\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario_text("topology = nonsense\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario_text("topology = rtp_vs_tcp\nbogus_key = 1\n"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_scenario_text("topology = rtp_vs_tcp\nrtp_flows = 0\ntcp_flows = 0\n"),
      ConfigError);
}

TEST_CASE("zero-duration scenario yields an empty trace") {
  Scenario sc;
  sc.topology = Topology::SingleVarLink;
  sc.duration = 0;
  const SimTrace trace = run(sc);
  CHECK(trace.events.empty());
  std::ostringstream out;
  write_trace_csv(trace, out);
  CHECK(out.str() ==
        "#fbra-trace-v1\n#duration_us=0\ntime_us,event_kind,flow_id,seq,size_bytes,extra\n");
}

TEST_CASE("identical scenario and seed give byte-identical traces") {
  Scenario sc;
  sc.topology = Topology::RtpVsTcp;
  sc.rtp_flows = 1;
  sc.tcp_flows = 3;
  sc.bottleneck_capacity = kbps(2000);
  sc.duration = 20 * kSecond;
  sc.seed = 5;

  const SimTrace first = run(sc);
  std::ostringstream a, b;
  write_trace_csv(first, a);
  write_trace_csv(run(sc), b);
  CHECK(a.str() == b.str());

  sc.seed = 6;
  std::ostringstream c;
  write_trace_csv(run(sc), c);
  CHECK(a.str() != c.str());

  // both traffic classes show up in the trace
  bool has_rtp = false, has_tcp = false;
  for (const auto& e : first.events) {
    has_rtp = has_rtp || e.flow == "rtp0";
    has_tcp = has_tcp || e.flow.rfind("tcp", 0) == 0;
  }
  CHECK(has_rtp);
  CHECK(has_tcp);
}

TEST_CASE("trace events are time ordered") {
  Scenario sc;
  sc.topology = Topology::SingleVarLink;
  sc.duration = 30 * kSecond;
  const SimTrace trace = run(sc);
  for (std::size_t i = 1; i < trace.events.size(); ++i) {
    CHECK(trace.events[i].at >= trace.events[i - 1].at);
  }
}

TEST_CASE("media packet conservation per flow") {
  Scenario sc;
  sc.topology = Topology::SingleVarLink;
  sc.duration = 60 * kSecond;
  const SimTrace trace = run(sc);

  std::map<std::int64_t, char> state;  // seq -> final event
  std::int64_t sent = 0;
  for (const auto& e : trace.events) {
    if (e.flow != "rtp0") continue;
    switch (e.kind) {
      case TraceEventKind::SendRtp:
        ++sent;
        break;
      case TraceEventKind::Recv:
        state[e.seq] = 'r';
        break;
      case TraceEventKind::Discard:
        state[e.seq] = 'd';
        break;
      case TraceEventKind::Loss:
        state[e.seq] = 'l';
        break;
      case TraceEventKind::Recovered:
        state[e.seq] = 'v';
        break;
      default:
        break;
    }
  }
  // every sent packet is accounted for or still in flight at the end
  std::int64_t accounted = static_cast<std::int64_t>(state.size());
  CHECK(accounted <= sent);
  CHECK(sent - accounted < 64);  // in-flight tail only
}

TEST_CASE("solo TCP utilization on a 5 Mbps link") {
  EventLoop loop;
  SimTrace trace;
  trace.duration = 100 * kSecond;

  std::vector<std::unique_ptr<Link>> links;
  TcpSender* sender_ptr = nullptr;
  TcpSink* sink_ptr = nullptr;

  // forward: 5 Mbps bottleneck with 50 ms delay; reverse: same for acks
  links.push_back(std::make_unique<Link>(loop, kbps(5000), 50 * kMillisecond, 50,
                                         [&](PacketPtr p) {
                                           sink_ptr->on_data(std::get<TcpSegment>(p->body),
                                                             p->size_bytes);
                                         }));
  links.push_back(std::make_unique<Link>(loop, kbps(5000), 50 * kMillisecond, 50,
                                         [&](PacketPtr p) {
                                           sender_ptr->on_ack(std::get<TcpSegment>(p->body));
                                         }));

  TcpSender::Config cfg;
  cfg.fixed_file_bytes = 500'000'000;  // effectively endless
  cfg.initial_stagger_seconds = 0.0;
  TcpSender sender(loop, 0, 1234, cfg,
                   [&](PacketPtr p) { links[0]->transmit(std::move(p)); });
  TcpSink sink(loop, 0, "tcp0", trace,
               [&](PacketPtr p) { links[1]->transmit(std::move(p)); });
  sender_ptr = &sender;
  sink_ptr = &sink;

  sender.start();
  loop.run_until(SimTime{100 * kSecond});

  const double utilization =
      static_cast<double>(sender.bytes_acked_total()) * 8 / (100.0 * 5'000'000.0);
  CHECK(utilization >= 0.80);
}

TEST_CASE("TCP window collapses on a drop signal") {
  EventLoop loop;
  std::vector<PacketPtr> sent;
  TcpSender::Config cfg;
  cfg.fixed_file_bytes = 1'000'000;
  cfg.initial_stagger_seconds = 0.0;
  TcpSender sender(loop, 0, 1, cfg, [&](PacketPtr p) { sent.push_back(std::move(p)); });
  sender.start();
  loop.run_until(SimTime{1});
  REQUIRE(sent.size() == 1);  // slow start opens with one segment

  // ack the first segment: cwnd 1 -> 2, two more segments leave
  auto ack = [&](std::int64_t upto, SimTime echo) {
    TcpSegment a;
    a.is_ack = true;
    a.ack = upto;
    a.transfer_id = 1;
    a.echo_ts = echo;
    sender.on_ack(a);
  };
  ack(1460, SimTime{0});
  CHECK(sent.size() == 3);

  // three duplicate acks signal a drop: window back to one, go-back-n resend
  const auto before = sent.size();
  ack(1460, SimTime{0});
  ack(1460, SimTime{0});
  ack(1460, SimTime{0});
  CHECK(sent.size() == before + 1);
  CHECK(std::get<TcpSegment>(sent.back()->body).offset == 1460);
}

TEST_CASE("TCP slow start doubles per round trip until ssthresh") {
  EventLoop loop;
  std::vector<std::int64_t> offsets;
  TcpSender::Config cfg;
  cfg.fixed_file_bytes = 10'000'000;
  cfg.initial_stagger_seconds = 0.0;
  cfg.initial_ssthresh_packets = 8.0;
  TcpSender sender(loop, 0, 1, cfg, [&](PacketPtr p) {
    offsets.push_back(std::get<TcpSegment>(p->body).offset);
  });
  sender.start();
  loop.run_until(SimTime{1});

  // deliver acks round by round and count how many segments each round frees
  std::size_t seen = 0;
  std::vector<std::size_t> per_round;
  for (int round = 0; round < 5; ++round) {
    const std::size_t outstanding = offsets.size() - seen;
    per_round.push_back(offsets.size());
    TcpSegment a;
    a.is_ack = true;
    a.ack = offsets[offsets.size() - 1] + 1460;
    a.transfer_id = 1;
    a.echo_ts = loop.now();
    seen = offsets.size();
    sender.on_ack(a);
    (void)outstanding;
  }
  // cumulative segments sent after each round: 1, 3, 7, 15, then AI past 8
  CHECK(per_round[0] == 1);
  CHECK(per_round[1] == 3);
  CHECK(per_round[2] == 7);
  CHECK(per_round[3] == 15);
}

TEST_CASE("TCP-only traffic never exceeds the link over one-second windows") {
  Scenario sc;
  sc.topology = Topology::RtpVsTcp;
  sc.rtp_flows = 0;
  sc.tcp_flows = 6;
  sc.bottleneck_capacity = kbps(3000);
  sc.duration = 60 * kSecond;
  sc.seed = 2;
  const SimTrace trace = run(sc);

  std::map<std::int64_t, std::int64_t> window_bits;
  for (const auto& e : trace.events) {
    if (e.kind == TraceEventKind::Recv) window_bits[e.at.us / kSecond] += e.size_bytes * 8;
  }
  for (const auto& [w, bits] : window_bits) {
    CHECK(bits <= 3'000'000);
  }
}
