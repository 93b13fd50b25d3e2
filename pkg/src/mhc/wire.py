"""Wire protocol mhc-wire/1: newline-delimited JSON over one duplex socket.

Every message carries kind, a per-sender monotonically increasing sequence
number and a millisecond timestamp; unknown fields are ignored.  State
frames stream the full pose, the fallen flag and the per-step reward
breakdown at the control rate.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ProtocolError
from .motion.pose import Pose
from .rewards import RewardBreakdown

WIRE_SCHEMA = "mhc-wire/1"
KINDS = ("hello", "directive_update", "state_frame", "metrics_frame", "error", "bye")


@dataclass
class WireMessage:
    kind: str
    seq: int
    timestamp_ms: int
    body: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"schema": WIRE_SCHEMA, "kind": self.kind, "seq": self.seq, "t_ms": self.timestamp_ms, **self.body}


def now_ms() -> int:
    return int(time.time() * 1000)


def encode(msg: WireMessage) -> bytes:
    return (json.dumps(msg.to_json_dict(), separators=(",", ":")) + "\n").encode("utf-8")


def decode_line(line: bytes | str) -> WireMessage:
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="strict")
    try:
        doc = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ProtocolError(f"malformed wire line: {e}") from e
    if not isinstance(doc, dict):
        raise ProtocolError("wire message is not an object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ProtocolError(f"unknown message kind {kind!r}")
    try:
        seq = int(doc["seq"])
        t_ms = int(doc["t_ms"])
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError(f"missing seq/t_ms: {e}") from e
    body = {k: v for k, v in doc.items() if k not in ("schema", "kind", "seq", "t_ms")}
    return WireMessage(kind=kind, seq=seq, timestamp_ms=t_ms, body=body)


class SequenceChecker:
    """Rejects non-increasing sequence numbers from a peer."""

    def __init__(self):
        self.last = -1

    def check(self, msg: WireMessage) -> WireMessage:
        if msg.seq <= self.last:
            raise ProtocolError(f"sequence number {msg.seq} not above {self.last}")
        self.last = msg.seq
        return msg


class Outbox:
    """Stamps outgoing messages with increasing sequence numbers."""

    def __init__(self, clock=now_ms):
        self.seq = 0
        self.clock = clock

    def make(self, kind: str, body: dict) -> WireMessage:
        self.seq += 1
        return WireMessage(kind=kind, seq=self.seq, timestamp_ms=self.clock(), body=body)


def pose_to_body(pose: Pose) -> dict:
    return {
        "root": {
            "pos": pose.root_pos.tolist(),
            "rot6d": pose.root_rot6d.tolist(),
            "lin_vel": pose.lin_vel.tolist(),
            "ang_vel": pose.ang_vel.tolist(),
        },
        "joint_global_pos": pose.joint_global.tolist(),
        "joint_local_pos": pose.joint_local.tolist(),
    }


def reward_to_body(b: RewardBreakdown, total: float) -> dict:
    return {
        "r_h": b.r_h,
        "r_o": b.r_o,
        "r_v": b.r_v,
        "r_l": b.r_l,
        "r_tr": b.r_tr,
        "style_parts": np.asarray(b.style_parts).tolist(),
        "r_st": b.r_st,
        "energy": b.energy,
        "total": total,
    }


def state_frame_body(pose: Pose, fallen: bool, breakdown: RewardBreakdown, total: float, tick: int) -> dict:
    return {
        "tick": tick,
        "pose": pose_to_body(pose),
        "fallen": bool(fallen),
        "reward": reward_to_body(breakdown, total),
    }
