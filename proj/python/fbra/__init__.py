"""FEC-based rate adaptation: parity codec, controller state machine,
deterministic network simulator and trace metrics."""

from fbra._core import (
    ControllerState,
    FecPacket,
    MediaPacket,
    OwdCorrelation,
    OwdTracker,
    StepResult,
    bounce_back,
    encode_block,
    fec_bitrate,
    flow_metrics,
    recover_missing,
    run_scenario,
    seq_after,
    seq_distance,
    step,
    tcp_fair_share,
    undershoot,
)

__all__ = [
    "ControllerState",
    "FecPacket",
    "MediaPacket",
    "OwdCorrelation",
    "OwdTracker",
    "StepResult",
    "bounce_back",
    "encode_block",
    "fec_bitrate",
    "flow_metrics",
    "recover_missing",
    "run_scenario",
    "seq_after",
    "seq_distance",
    "step",
    "tcp_fair_share",
    "undershoot",
]
