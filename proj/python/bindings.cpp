#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fbra/controller.hpp"
#include "fbra/endpoints.hpp"
#include "fbra/fec.hpp"
#include "fbra/metrics.hpp"
#include "fbra/owd.hpp"
#include "fbra/runner.hpp"
#include "fbra/scenario.hpp"
#include "fbra/trace.hpp"

namespace py = pybind11;
using namespace fbra;

namespace {

MediaPacket make_media_packet(std::uint32_t ssrc, Seq seq, const py::bytes& payload) {
  MediaPacket p;
  p.ssrc = ssrc;
  p.seq = seq;
  const std::string raw = payload;
  p.payload.assign(raw.begin(), raw.end());
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "FEC-based rate adaptation: codec, controller, simulator and metrics";

  m.def("seq_after", &seq_after, py::arg("a"), py::arg("b"),
        "true iff a follows b under 16-bit wraparound ordering");
  m.def("seq_distance", &seq_distance, py::arg("from_seq"), py::arg("to_seq"));

  py::class_<MediaPacket>(m, "MediaPacket")
      .def(py::init(&make_media_packet), py::arg("ssrc"), py::arg("seq"), py::arg("payload"))
      .def_readwrite("ssrc", &MediaPacket::ssrc)
      .def_readwrite("seq", &MediaPacket::seq)
      .def_readwrite("frame_id", &MediaPacket::frame_id)
      .def_property(
          "payload",
          [](const MediaPacket& p) {
            return py::bytes(reinterpret_cast<const char*>(p.payload.data()),
                             p.payload.size());
          },
          [](MediaPacket& p, const py::bytes& b) {
            const std::string raw = b;
            p.payload.assign(raw.begin(), raw.end());
          })
      .def_property_readonly("size_bytes", &MediaPacket::size_bytes);

  py::class_<FecPacket>(m, "FecPacket")
      .def_readonly("ssrc", &FecPacket::ssrc)
      .def_readonly("base_seq", &FecPacket::base_seq)
      .def_readonly("block_len", &FecPacket::block_len)
      .def_readonly("length_field", &FecPacket::length_field)
      .def_property_readonly("parity_payload", [](const FecPacket& p) {
        return py::bytes(reinterpret_cast<const char*>(p.parity_payload.data()),
                         p.parity_payload.size());
      });

  m.def(
      "encode_block",
      [](const std::vector<MediaPacket>& packets) { return encode_block(packets); },
      py::arg("packets"));
  m.def(
      "recover_missing",
      [](const std::vector<MediaPacket>& received, const FecPacket& fec)
          -> std::optional<MediaPacket> {
        FecBlockState state;
        state.base_seq = fec.base_seq;
        state.block_len = fec.block_len;
        state.fec = fec;
        state.deadline = SimTime{std::numeric_limits<std::int64_t>::max()};
        for (const auto& p : received) state.received.emplace(p.seq, p);
        return try_recover(state, SimTime{0});
      },
      py::arg("received"), py::arg("fec"),
      "rebuild the single missing packet of a parity block, or None");
  m.def(
      "fec_bitrate",
      [](std::int64_t media_rate_bps, int fec_interval, int avg_packet_size) {
        return fec_bitrate(BitRate{media_rate_bps}, fec_interval, avg_packet_size).bps;
      },
      py::arg("media_rate_bps"), py::arg("fec_interval"), py::arg("avg_packet_size"));

  py::class_<OwdCorrelation>(m, "OwdCorrelation")
      .def_readonly("corr_low", &OwdCorrelation::corr_low)
      .def_readonly("corr_high", &OwdCorrelation::corr_high)
      .def_readonly("p40", &OwdCorrelation::p40)
      .def_readonly("p80", &OwdCorrelation::p80);

  py::class_<OwdTracker>(m, "OwdTracker")
      .def(py::init<std::size_t>(), py::arg("capacity") = 20)
      .def("admit_sample",
           [](OwdTracker& t, std::int64_t owd_us, bool clean) {
             FeedbackReport r;
             r.owd_sample = owd_us;
             if (!clean) r.loss_events.push_back({0, SimTime{0}});
             t.admit(r);
           },
           py::arg("owd_us"), py::arg("clean") = true)
      .def("percentile", &OwdTracker::percentile, py::arg("p"))
      .def("correlate", &OwdTracker::correlate, py::arg("current_owd_us"))
      .def("__len__", &OwdTracker::size);

  m.def(
      "undershoot",
      [](std::int64_t sending_bps, std::int64_t goodput_bps) {
        return undershoot_rate(BitRate{sending_bps}, BitRate{goodput_bps}).bps;
      },
      py::arg("sending_rate_bps"), py::arg("goodput_bps"));
  m.def(
      "bounce_back",
      [](std::int64_t stored_goodput_bps) {
        return bounce_back_rate(BitRate{stored_goodput_bps}).bps;
      },
      py::arg("stored_goodput_bps"));

  py::enum_<ControllerState>(m, "ControllerState")
      .value("STAY", ControllerState::Stay)
      .value("PROBE", ControllerState::Probe)
      .value("UP", ControllerState::Up)
      .value("DOWN", ControllerState::Down);

  py::class_<StepResult> step_result(m, "StepResult");
  py::enum_<StepResult::RateAction>(step_result, "RateAction")
      .value("KEEP", StepResult::RateAction::Keep)
      .value("UNDERSHOOT", StepResult::RateAction::Undershoot)
      .value("UNDERSHOOT_NO_DISABLE", StepResult::RateAction::UndershootNoDisable)
      .value("ADD_FEC_RATE", StepResult::RateAction::AddFecRate);
  step_result.def_readonly("new_state", &StepResult::new_state)
      .def_readonly("fec_enabled", &StepResult::fec_enabled)
      .def_readonly("increment_fec_interval", &StepResult::increment_fec_interval)
      .def_readonly("rate_action", &StepResult::rate_action);

  m.def(
      "step",
      [](ControllerState state, ControllerState prev_state, bool losses, bool recent_losses,
         bool discards, bool recent_discards, double corr_low, double corr_high,
         bool probe_blocked) {
        CongestionCues cues;
        cues.losses = losses;
        cues.recent_losses = recent_losses;
        cues.discards = discards;
        cues.recent_discards = recent_discards;
        cues.corr.corr_low = corr_low;
        cues.corr.corr_high = corr_high;
        return fbra_step(state, prev_state, cues, Thresholds{}, probe_blocked);
      },
      py::arg("state"), py::arg("prev_state"), py::arg("losses"), py::arg("recent_losses"),
      py::arg("discards"), py::arg("recent_discards"), py::arg("corr_low"),
      py::arg("corr_high"), py::arg("probe_blocked") = false,
      "one transition of the rate-adaptation state machine");

  m.def(
      "run_scenario",
      [](const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
         std::optional<double> duration_s) {
        RunOptions options;
        options.scenario_path = config_path;
        options.seed = seed;
        options.out_dir = out_dir;
        options.duration_override_s = duration_s;
        return cmd_run(options);
      },
      py::arg("config_path"), py::arg("seed"), py::arg("out_dir"),
      py::arg("duration_s") = std::nullopt,
      "run one simulation and write trace.csv/summary.json/timeseries.csv; returns exit code");

  m.def(
      "flow_metrics",
      [](const std::string& trace_path, const std::string& flow) {
        const SimTrace trace = read_trace_csv_file(trace_path);
        const FlowSummary s = flow_summary(trace, flow);
        py::dict out;
        out["flow"] = s.flow;
        out["goodput_bps"] = s.goodput.bps;
        out["loss_rate"] = s.loss_rate;
        out["lost_frames"] = s.lost_frames;
        out["fec_rate_bps"] = s.fec_rate.bps;
        out["frcc"] = s.frcc ? py::cast(*s.frcc) : py::none();
        out["ffre"] = s.ffre ? py::cast(*s.ffre) : py::none();
        out["packets_sent"] = s.packets_sent;
        out["packets_lost"] = s.packets_lost;
        out["packets_recovered"] = s.packets_recovered;
        out["packets_discarded"] = s.packets_discarded;
        return out;
      },
      py::arg("trace_path"), py::arg("flow"),
      "summary metrics for one flow of a written trace");

  m.def("tcp_fair_share", [](const std::string& trace_path) {
    return tfs(read_trace_csv_file(trace_path));
  });
}
