"""Masked motion directives.

A directive is a window of target poses plus a selection mask saying which
pose dimensions constrain the controller.  Masking happens at two levels:
channel level (root channel, joint rotations, root-relative positions,
global positions, or a joystick-style root-field subset) and joint level
(per-joint exclusion on the position channels).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data.dataset import MotionDataset
from .errors import DatasetTooSmall, SchemaError
from .motion import rotations as rot
from .motion.clip import MotionClip
from .motion.pose import Pose
from .motion.transforms import apply_inplane_rotation

DIRECTIVE_SCHEMA = "mhc-directive/1"

# Channels
R = "R"
THETA = "THETA"
L = "L"
G = "G"
CHANNELS = (R, THETA, L, G)

# Root-field sub-selection (joystick-style directives)
HEIGHT = "height"
ORIENTATION = "orientation"
PLANAR_VELOCITY = "planar_velocity"
ROOT_FIELDS = (HEIGHT, ORIENTATION, PLANAR_VELOCITY)

DEFAULT_HORIZON = 10


@dataclass(frozen=True)
class DirectiveMask:
    """Channel selection + per-joint selection for the position channels.

    joint_mask[j] is True when joint j is selected; it only carries meaning
    when a position channel (L or G) is selected and is normalized to
    all-False otherwise.  root_fields = None means the full root channel;
    a set restricts it to the named fields.
    """

    channels: frozenset
    joint_mask: np.ndarray
    root_fields: frozenset | None = None

    def __post_init__(self):
        channels = frozenset(self.channels)
        if not channels <= set(CHANNELS):
            raise SchemaError(f"unknown channels {channels - set(CHANNELS)}")
        jm = np.asarray(self.joint_mask, dtype=bool).copy()
        if L not in channels and G not in channels:
            jm[:] = False
        jm.setflags(write=False)
        rf = self.root_fields
        if rf is not None:
            rf = frozenset(rf)
            if not rf <= set(ROOT_FIELDS):
                raise SchemaError(f"unknown root fields {rf - set(ROOT_FIELDS)}")
            if R in channels and not rf:
                raise SchemaError("R selected with an empty root-field set")
        selected_any = bool(channels) and (
            channels - {R} or (R in channels and (rf is None or rf))
        )
        if not selected_any:
            raise SchemaError("directive mask selects nothing")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "joint_mask", jm)
        object.__setattr__(self, "root_fields", rf)

    # -- root-feature selectors -------------------------------------------

    def _has_field(self, name: str) -> bool:
        if R not in self.channels:
            return False
        return self.root_fields is None or name in self.root_fields

    @property
    def selects_root_xy(self) -> bool:
        return R in self.channels and self.root_fields is None

    @property
    def selects_height(self) -> bool:
        return self._has_field(HEIGHT)

    @property
    def selects_orientation(self) -> bool:
        return self._has_field(ORIENTATION)

    @property
    def selects_velocity(self) -> bool:
        return self._has_field(PLANAR_VELOCITY)

    @property
    def selects_angvel(self) -> bool:
        return R in self.channels and self.root_fields is None

    @property
    def position_channel(self) -> str | None:
        """Which position channel the joint terms read: L wins over G."""
        if L in self.channels:
            return L
        if G in self.channels:
            return G
        return None

    def describe(self) -> str:
        chan = "+".join(c for c in CHANNELS if c in self.channels)
        if self.root_fields is not None:
            chan += "[" + ",".join(sorted(self.root_fields)) + "]"
        sel = int(np.sum(self.joint_mask))
        total = len(self.joint_mask)
        if self.position_channel and sel < total:
            chan += f" joints {sel}/{total}"
        return chan

    def to_json_dict(self) -> dict:
        return {
            "channels": sorted(self.channels),
            "joint_mask": [bool(b) for b in self.joint_mask],
            "root_fields": None if self.root_fields is None else sorted(self.root_fields),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DirectiveMask":
        return cls(
            channels=frozenset(doc["channels"]),
            joint_mask=np.array(doc["joint_mask"], dtype=bool),
            root_fields=None if doc.get("root_fields") is None else frozenset(doc["root_fields"]),
        )


def full_pose_mask(joint_count: int) -> DirectiveMask:
    return DirectiveMask(frozenset({R, THETA, L}), np.ones(joint_count, dtype=bool))


def proprioception_mask(joint_count: int) -> DirectiveMask:
    return DirectiveMask(frozenset({R, THETA}), np.zeros(joint_count, dtype=bool))


def proprioception_fk_mask(joint_count: int) -> DirectiveMask:
    return DirectiveMask(frozenset({R, L}), np.ones(joint_count, dtype=bool))


def keypoint_mask(joint_count: int, selected=None) -> DirectiveMask:
    jm = np.ones(joint_count, dtype=bool)
    if selected is not None:
        jm[:] = False
        jm[np.asarray(selected, dtype=int)] = True
    return DirectiveMask(frozenset({G}), jm)


def joystick_mask(joint_count: int) -> DirectiveMask:
    return DirectiveMask(
        frozenset({R}),
        np.zeros(joint_count, dtype=bool),
        root_fields=frozenset(ROOT_FIELDS),
    )


def channel_mask_menu(joint_count: int) -> list[DirectiveMask]:
    """The five channel combinations episodes sample from: full pose,
    proprioception, proprioception-with-FK, global keypoints, joystick."""
    return [
        full_pose_mask(joint_count),
        proprioception_mask(joint_count),
        proprioception_fk_mask(joint_count),
        keypoint_mask(joint_count),
        joystick_mask(joint_count),
    ]


MENU_NAMES = ("full_pose", "proprioception", "proprioception_fk", "keypoints", "joystick")


@dataclass
class TargetTrack:
    """Dense target channels over a directive window (always fully stored;
    the mask decides what is exposed)."""

    root_pos: np.ndarray  # (T, 3)
    root_rot6d: np.ndarray  # (T, 6)
    lin_vel: np.ndarray  # (T, 3)
    ang_vel: np.ndarray  # (T, 3)
    joint_rot6d: np.ndarray  # (T, J, 6)
    joint_local: np.ndarray  # (T, J, 3)
    joint_global: np.ndarray  # (T, J, 3)

    def __len__(self) -> int:
        return self.root_pos.shape[0]

    @classmethod
    def from_clip(cls, clip: MotionClip, start: int = 0, stop: int | None = None) -> "TargetTrack":
        stop = len(clip) if stop is None else stop
        return cls(
            root_pos=clip.root_pos[start:stop],
            root_rot6d=clip.root_rot6d[start:stop],
            lin_vel=clip.lin_vel[start:stop],
            ang_vel=clip.ang_vel[start:stop],
            joint_rot6d=clip.joint_rot6d[start:stop],
            joint_local=clip.joint_local[start:stop],
            joint_global=clip.joint_global[start:stop],
        )

    @classmethod
    def concatenate(cls, tracks: list["TargetTrack"]) -> "TargetTrack":
        return cls(
            root_pos=np.concatenate([t.root_pos for t in tracks]),
            root_rot6d=np.concatenate([t.root_rot6d for t in tracks]),
            lin_vel=np.concatenate([t.lin_vel for t in tracks]),
            ang_vel=np.concatenate([t.ang_vel for t in tracks]),
            joint_rot6d=np.concatenate([t.joint_rot6d for t in tracks]),
            joint_local=np.concatenate([t.joint_local for t in tracks]),
            joint_global=np.concatenate([t.joint_global for t in tracks]),
        )

    def truncate(self, length: int) -> "TargetTrack":
        return TargetTrack(
            root_pos=self.root_pos[:length],
            root_rot6d=self.root_rot6d[:length],
            lin_vel=self.lin_vel[:length],
            ang_vel=self.ang_vel[:length],
            joint_rot6d=self.joint_rot6d[:length],
            joint_local=self.joint_local[:length],
            joint_global=self.joint_global[:length],
        )

    def root_mats(self) -> np.ndarray:
        """(T, 3, 3) decoded root orientations, lazily cached."""
        cached = getattr(self, "_root_mats", None)
        if cached is None or cached.shape[0] != len(self):
            cached = rot.sixd_to_matrix_unchecked(self.root_rot6d)
            self._root_mats = cached
        return cached


@dataclass
class Directive:
    """Target frames + one mask, constant over the whole window."""

    track: TargetTrack
    mask: DirectiveMask
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        if len(self.track) < 1:
            raise SchemaError("directive needs at least one frame")

    def __len__(self) -> int:
        return len(self.track)

    def clamp_index(self, t: int) -> int:
        """Directives pad by repeating their last frame."""
        return min(max(t, 0), len(self) - 1)

    def target_pose(self, t: int) -> Pose:
        i = self.clamp_index(t)
        tr = self.track
        return Pose(
            root_pos=tr.root_pos[i],
            root_rot6d=tr.root_rot6d[i],
            lin_vel=tr.lin_vel[i],
            ang_vel=tr.ang_vel[i],
            joint_rot6d=tr.joint_rot6d[i],
            joint_local=tr.joint_local[i],
            joint_global=tr.joint_global[i],
        )

    @classmethod
    def from_clip(cls, clip: MotionClip, mask: DirectiveMask, horizon: int = DEFAULT_HORIZON) -> "Directive":
        return cls(track=TargetTrack.from_clip(clip), mask=mask, horizon=horizon)


@dataclass(frozen=True)
class EpisodeSpec:
    """Parameters of the episode directive distribution."""

    length: int = 300
    subseq_min: int = 120
    subseq_max: int = 240
    joint_mask_prob: float = 0.5
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        if self.length <= 0 or self.subseq_min > self.subseq_max:
            raise SchemaError("bad episode spec")


@dataclass
class EpisodePlan:
    """The sampled randomness of one episode, separate from realization."""

    segments: list  # (clip index, start frame, length, yaw)
    menu_index: int
    mask: DirectiveMask
    joint_mask_applied: bool


def sample_channel_mask(rng: np.random.Generator, joint_count: int, index: int | None = None) -> DirectiveMask:
    """Uniform draw from the five-entry channel menu (or a forced entry)."""
    menu = channel_mask_menu(joint_count)
    if index is None:
        index = int(rng.integers(len(menu)))
    return menu[index]


def sample_joint_mask(rng: np.random.Generator, joint_count: int, percent: float | None = None) -> np.ndarray:
    """Mask out a uniform floor(p*J/100)-subset of joints; True = selected."""
    if joint_count <= 0:
        raise SchemaError("joint_count must be positive")
    if percent is None:
        percent = rng.uniform(0.0, 100.0)
    k = int(np.floor(percent * joint_count / 100.0))
    k = min(k, joint_count)
    selected = np.ones(joint_count, dtype=bool)
    if k > 0:
        masked = rng.choice(joint_count, size=k, replace=False)
        selected[masked] = False
    return selected


def plan_episode(mplus: MotionDataset, spec: EpisodeSpec, rng: np.random.Generator) -> EpisodePlan:
    """Sample the mask and sub-sequence layout of one episode."""
    joint_count = mplus.skeleton.joint_count
    menu_index = int(rng.integers(len(MENU_NAMES)))
    mask = sample_channel_mask(rng, joint_count, index=menu_index)
    applied = bool(rng.uniform() < spec.joint_mask_prob)
    if applied:
        jm = sample_joint_mask(rng, joint_count)
        mask = DirectiveMask(mask.channels, jm & mask.joint_mask, mask.root_fields)

    usable = [i for i, c in enumerate(mplus.clips) if len(c) >= spec.subseq_min]
    if not usable:
        raise DatasetTooSmall(f"no clip has {spec.subseq_min}+ frames")
    segments = []
    total = 0
    while total < spec.length:
        ci = usable[int(rng.integers(len(usable)))]
        clip_len = len(mplus.clips[ci])
        sub_max = min(spec.subseq_max, clip_len)
        length = int(rng.integers(spec.subseq_min, sub_max + 1))
        start = int(rng.integers(clip_len - length + 1))
        yaw = float(rng.uniform(0.0, 2.0 * np.pi))
        segments.append((ci, start, length, yaw))
        total += length
    return EpisodePlan(segments=segments, menu_index=menu_index, mask=mask, joint_mask_applied=applied)


def realize_plan(mplus: MotionDataset, plan: EpisodePlan, spec: EpisodeSpec) -> Directive:
    """Materialize a plan: rotated sub-sequences concatenated and truncated."""
    tracks = []
    for ci, start, length, yaw in plan.segments:
        piece = mplus.clips[ci].slice(start, start + length)
        piece = apply_inplane_rotation(piece, yaw, piece.root_pos[0, :2])
        tracks.append(TargetTrack.from_clip(piece))
    track = TargetTrack.concatenate(tracks).truncate(spec.length)
    return Directive(track=track, mask=plan.mask, horizon=spec.horizon)


def build_episode_directive(mplus: MotionDataset, spec: EpisodeSpec, rng: np.random.Generator) -> Directive:
    """Sample one full episode directive (see plan_episode/realize_plan)."""
    return realize_plan(mplus, plan_episode(mplus, spec, rng), spec)


# ---------------------------------------------------------------------------
# policy observation encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObservationLayout:
    joint_count: int

    @property
    def current_dim(self) -> int:
        return 13 + 9 * self.joint_count

    @property
    def target_dim(self) -> int:
        return 15 + 12 * self.joint_count

    @property
    def mask_dim(self) -> int:
        return 8 + self.joint_count

    @property
    def directive_dim(self) -> int:
        return 2 * self.target_dim + self.mask_dim

    @property
    def total_dim(self) -> int:
        return self.current_dim + self.directive_dim


def _current_features(pose: Pose, rz_inv: np.ndarray, out: np.ndarray) -> None:
    nj = pose.joint_count
    canon = rz_inv @ pose.root_matrix()
    out[0] = pose.root_pos[2]
    out[1:4] = canon[:, 0]
    out[4:7] = canon[:, 1]
    out[7:10] = rz_inv @ pose.lin_vel
    out[10:13] = rz_inv @ pose.ang_vel
    out[13 : 13 + 6 * nj] = pose.joint_rot6d.ravel()
    out[13 + 6 * nj :] = pose.joint_local.ravel()


def _target_features(pose: Pose, directive: Directive, t: int, rz_inv: np.ndarray, out: np.ndarray) -> None:
    mask = directive.mask
    tr = directive.track
    i = directive.clamp_index(t)
    nj = pose.joint_count
    if mask.selects_root_xy:
        out[0:2] = rz_inv[:2, :2] @ (tr.root_pos[i, :2] - pose.root_pos[:2])
    if mask.selects_height:
        out[2] = tr.root_pos[i, 2] - pose.root_pos[2]
    if mask.selects_orientation:
        canon = rz_inv @ tr.root_mats()[i]
        out[3:6] = canon[:, 0]
        out[6:9] = canon[:, 1]
    if mask.selects_velocity:
        dv = rz_inv @ (tr.lin_vel[i] - pose.lin_vel)
        if not mask.selects_root_xy:
            dv[2] = 0.0  # joystick-style velocity targets are planar
        out[9:12] = dv
    if mask.selects_angvel:
        out[12:15] = rz_inv @ (tr.ang_vel[i] - pose.ang_vel)
    base = 15
    if THETA in mask.channels:
        out[base : base + 6 * nj] = tr.joint_rot6d[i].ravel()
    base += 6 * nj
    if mask.position_channel == L:
        diff = (tr.joint_local[i] - pose.joint_local) * mask.joint_mask[:, None]
        out[base : base + 3 * nj] = diff.ravel()
    base += 3 * nj
    if G in mask.channels:
        diff = (tr.joint_global[i] - pose.joint_global) @ rz_inv.T * mask.joint_mask[:, None]
        out[base : base + 3 * nj] = diff.ravel()


def _mask_bits(mask: DirectiveMask, nj: int) -> np.ndarray:
    bits = np.zeros(8 + nj)
    bits[0] = mask.selects_root_xy
    bits[1] = mask.selects_height
    bits[2] = mask.selects_orientation
    bits[3] = mask.selects_velocity
    bits[4] = mask.selects_angvel
    bits[5] = THETA in mask.channels
    bits[6] = L in mask.channels
    bits[7] = G in mask.channels
    bits[8:] = mask.joint_mask
    return bits


def encode_observation(current: Pose, directive: Directive, t: int) -> np.ndarray:
    """Policy observation: heading-canonicalized current pose, masked target
    features at lookahead offsets {1, H} (zero-filled where unselected), and
    the mask bits.  Invariant under a common in-plane rotation of the pose
    and the directive."""
    nj = current.joint_count
    layout = ObservationLayout(nj)
    yaw = rot.yaw_of_matrix(current.root_matrix())
    rz_inv = rot.rotz(-yaw)
    out = np.zeros(layout.total_dim)
    cur_d, tgt_d = layout.current_dim, layout.target_dim
    _current_features(current, rz_inv, out[:cur_d])
    _target_features(current, directive, t + 1, rz_inv, out[cur_d : cur_d + tgt_d])
    _target_features(
        current, directive, t + directive.horizon, rz_inv, out[cur_d + tgt_d : cur_d + 2 * tgt_d]
    )
    out[cur_d + 2 * tgt_d :] = _mask_bits(directive.mask, nj)
    return out


# ---------------------------------------------------------------------------
# directive files (mhc-directive/1)
# ---------------------------------------------------------------------------


def directive_to_json_dict(directive: Directive) -> dict:
    """Serialize with only the selected fields written out."""
    mask = directive.mask
    tr = directive.track
    frames = []
    jm = mask.joint_mask[:, None]
    for i in range(len(tr)):
        rec: dict = {}
        if R in mask.channels:
            root: dict = {}
            if mask.selects_root_xy:
                root["pos"] = tr.root_pos[i].tolist()
            if mask.selects_height:
                root["height"] = float(tr.root_pos[i, 2])
            if mask.selects_orientation:
                root["rot6d"] = tr.root_rot6d[i].tolist()
            if mask.selects_velocity:
                root["lin_vel"] = tr.lin_vel[i].tolist()
            if mask.selects_angvel:
                root["ang_vel"] = tr.ang_vel[i].tolist()
            rec["root"] = root
        if THETA in mask.channels:
            rec["joint_rot6d"] = tr.joint_rot6d[i].tolist()
        if L in mask.channels:
            rec["joint_local_pos"] = (tr.joint_local[i] * jm).tolist()
        if G in mask.channels:
            rec["joint_global_pos"] = (tr.joint_global[i] * jm).tolist()
        frames.append(rec)
    return {
        "schema": DIRECTIVE_SCHEMA,
        "mask": mask.to_json_dict(),
        "horizon": directive.horizon,
        "frames": frames,
    }


def directive_from_json_dict(doc: dict, joint_count: int) -> Directive:
    if doc.get("schema") != DIRECTIVE_SCHEMA:
        raise SchemaError(f"expected schema {DIRECTIVE_SCHEMA!r}, got {doc.get('schema')!r}")
    try:
        mask = DirectiveMask.from_json_dict(doc["mask"])
        frames = doc["frames"]
        t = len(frames)
        if len(mask.joint_mask) != joint_count:
            raise SchemaError("joint_mask length does not match the skeleton")
        track = TargetTrack(
            root_pos=np.zeros((t, 3)),
            root_rot6d=np.tile(rot.IDENTITY_6D, (t, 1)),
            lin_vel=np.zeros((t, 3)),
            ang_vel=np.zeros((t, 3)),
            joint_rot6d=np.tile(rot.IDENTITY_6D, (t, joint_count, 1)),
            joint_local=np.zeros((t, joint_count, 3)),
            joint_global=np.zeros((t, joint_count, 3)),
        )
        for i, rec in enumerate(frames):
            root = rec.get("root", {})
            if "pos" in root:
                track.root_pos[i] = root["pos"]
            if "height" in root:
                track.root_pos[i, 2] = root["height"]
            if "rot6d" in root:
                track.root_rot6d[i] = root["rot6d"]
            if "lin_vel" in root:
                track.lin_vel[i] = root["lin_vel"]
            if "ang_vel" in root:
                track.ang_vel[i] = root["ang_vel"]
            if "joint_rot6d" in rec:
                track.joint_rot6d[i] = rec["joint_rot6d"]
            if "joint_local_pos" in rec:
                track.joint_local[i] = rec["joint_local_pos"]
            if "joint_global_pos" in rec:
                track.joint_global[i] = rec["joint_global_pos"]
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"malformed directive: {e}") from e
    return Directive(track=track, mask=mask, horizon=int(doc.get("horizon", DEFAULT_HORIZON)))


def save_directive(directive: Directive, path) -> None:
    Path(path).write_text(json.dumps(directive_to_json_dict(directive)) + "\n")


def load_directive(path, joint_count: int) -> Directive:
    return directive_from_json_dict(json.loads(Path(path).read_text()), joint_count)
