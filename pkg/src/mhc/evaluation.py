"""Metrics and evaluation protocols: imitate, catchup, combine, complete.

MPJPE is the root-relative joint position error in millimeters, averaged
over frames and selected joints.  An episode succeeds when the fraction of
failed frames (max selected-joint error above 1 m) stays below the
protocol's budget: 0.10 by default, 0.25 for catchup, which inherently
starts out of sync.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import checkpoint as ckpt
from . import directives as dv
from .data.augment import AugmentSpec, combine_upper_lower
from .data.dataset import MotionDataset
from .data.fallbank import generate_fall_bank, sample_initial_pose
from .errors import LengthMismatch, NoSelectedJoints, SchemaError
from .learn.policy import GaussianPolicy, PolicyConfig
from .learn.trainer import TrainConfig
from .motion.clip import MotionClip
from .motion.pose import Pose
from .simcore.config import SimConfig
from .simcore.engine import BatchSim
from .motion.skeleton import SkeletonSpec

FAIL_DISTANCE = 1.0  # m, max selected-joint error marking a failed frame
DEFAULT_BUDGET = 0.10
CATCHUP_BUDGET = 0.25
PROTOCOLS = ("imitate", "catchup", "combine", "complete")


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def _selected_joints(target: dv.Directive) -> np.ndarray:
    mask = target.mask
    if mask.position_channel is None:
        # channel-level masks without positions: measure over every joint
        return np.ones(len(mask.joint_mask), dtype=bool)
    sel = mask.joint_mask
    if not sel.any():
        raise NoSelectedJoints("directive selects no joints")
    return sel


def _joint_errors(generated: MotionClip, target: dv.Directive) -> np.ndarray:
    if len(generated) != len(target):
        raise LengthMismatch(f"{len(generated)} generated vs {len(target)} target frames")
    sel = _selected_joints(target)
    diff = generated.joint_local[:, sel] - target.track.joint_local[:, sel]
    return np.linalg.norm(diff, axis=-1)  # (T, selected)


def mpjpe(generated: MotionClip, target: dv.Directive) -> float:
    """Mean per-joint position error over frames and selected joints, mm."""
    return float(np.mean(_joint_errors(generated, target))) * 1000.0


def fail_frame_fraction(generated: MotionClip, target: dv.Directive) -> float:
    errors = _joint_errors(generated, target)
    return float(np.mean(np.max(errors, axis=1) > FAIL_DISTANCE))


def success_rate(generated: MotionClip, target: dv.Directive, fail_frame_budget: float = DEFAULT_BUDGET) -> bool:
    """True when the failed-frame fraction stays strictly below the budget."""
    return fail_frame_fraction(generated, target) < fail_frame_budget


# ---------------------------------------------------------------------------
# controllers
# ---------------------------------------------------------------------------


class PolicyController:
    """Deterministic (mean-action) wrapper around a trained policy."""

    def __init__(self, policy: GaussianPolicy, joint_count: int):
        self.policy = policy
        self.joint_count = joint_count

    @classmethod
    def load(cls, path, skel: SkeletonSpec) -> "PolicyController":
        tree, meta = ckpt.load_tree(path)
        if meta.get("skeleton") != skel.name:
            raise SchemaError(
                f"checkpoint skeleton {meta.get('skeleton')!r} does not match {skel.name!r}"
            )
        cfg = TrainConfig.from_json_dict(meta["config"])
        layout = dv.ObservationLayout(skel.joint_count)
        policy = GaussianPolicy(layout, 3 * skel.joint_count, cfg.policy, seed=0)
        policy.params["enc"] = tree["policy"]["enc"]
        policy.params["head"] = tree["policy"]["head"]
        policy.params["log_std"] = tree["policy"]["log_std"]
        return cls(policy, skel.joint_count)

    def act(self, pose: Pose, directive: dv.Directive, t: int) -> np.ndarray:
        obs = dv.encode_observation(pose, directive, t)
        return self.policy.act(obs[None])[0].reshape(self.joint_count, 3)


class ZeroController:
    """Holds zero setpoints (the rest configuration)."""

    def act(self, pose: Pose, directive: dv.Directive, t: int) -> np.ndarray:
        return np.zeros((pose.joint_count, 3))


class TeleportController:
    """Oracle upper bound: the runner places the state on the target."""


def rollout_directive(
    controller,
    skel: SkeletonSpec,
    sim_cfg: SimConfig,
    directive: dv.Directive,
    initial_pose: Pose,
) -> MotionClip:
    """Drive the simulator along a directive with a sliding-window lookahead.

    The generated clip has the directive's length; frame 0 is the initial
    pose and frame t the state after t control steps (the directive index
    advances in lockstep with sim time, with no re-synchronization).
    """
    t_max = len(directive)
    sim = BatchSim(skel, sim_cfg, 1)
    sim.reset_env(0, initial_pose)
    frames = [initial_pose]
    teleport = isinstance(controller, TeleportController)
    for t in range(t_max - 1):
        if teleport:
            sim.teleport_env(0, directive.target_pose(t + 1))
            sim.steps[0] += 1
        else:
            pose = frames[-1]
            action = controller.act(pose, directive, t)
            sim.step(action[None])
        frames.append(sim.poses()[0])
    return MotionClip(
        name="rollout",
        fps=float(sim_cfg.control_hz),
        skeleton=skel,
        root_pos=np.stack([f.root_pos for f in frames]),
        root_rot6d=np.stack([f.root_rot6d for f in frames]),
        lin_vel=np.stack([f.lin_vel for f in frames]),
        ang_vel=np.stack([f.ang_vel for f in frames]),
        joint_rot6d=np.stack([f.joint_rot6d for f in frames]),
        joint_local=np.stack([f.joint_local for f in frames]),
        joint_global=np.stack([f.joint_global for f in frames]),
        source="generated",
    )


# ---------------------------------------------------------------------------
# protocols
# ---------------------------------------------------------------------------


@dataclass
class EpisodeResult:
    episode: int
    mpjpe_mm: float
    fail_fraction: float
    success: bool
    error: str = ""


@dataclass
class EvalReport:
    protocol: str
    mask_desc: str
    budget: float
    episodes: list = field(default_factory=list)

    @property
    def mean_mpjpe(self) -> float:
        ok = [e.mpjpe_mm for e in self.episodes if not e.error]
        return float(np.mean(ok)) if ok else float("nan")

    @property
    def success_fraction(self) -> float:
        ok = [e.success for e in self.episodes if not e.error]
        return float(np.mean(ok)) if ok else 0.0

    def rows(self) -> list:
        return [
            {
                "protocol": self.protocol,
                "mask": self.mask_desc,
                "episode": e.episode,
                "mpjpe_mm": e.mpjpe_mm,
                "fail_fraction": e.fail_fraction,
                "success": int(e.success),
                "error": e.error,
            }
            for e in self.episodes
        ]


@dataclass(frozen=True)
class ProtocolParams:
    n_episodes: int = 20
    episode_length: int = 300
    joint_fractions: tuple = (0.0, 0.25, 0.5, 0.75)
    fall_bank_size: int = 8
    horizon: int = dv.DEFAULT_HORIZON


def _episode_lengths(dataset: MotionDataset, params: ProtocolParams) -> int:
    shortest = min(len(c) for c in dataset.clips)
    return min(params.episode_length, shortest)


def _run_cell(
    report: EvalReport,
    controller,
    dataset: MotionDataset,
    sim_cfg: SimConfig,
    episodes,
) -> EvalReport:
    from .errors import MhcError

    for i, (directive, initial) in enumerate(episodes):
        try:
            generated = rollout_directive(controller, dataset.skeleton, sim_cfg, directive, initial)
            frac = fail_frame_fraction(generated, directive)
            report.episodes.append(
                EpisodeResult(
                    episode=i,
                    mpjpe_mm=mpjpe(generated, directive),
                    fail_fraction=frac,
                    success=frac < report.budget,
                )
            )
        except MhcError as e:  # recorded, not fatal
            report.episodes.append(
                EpisodeResult(episode=i, mpjpe_mm=float("nan"), fail_fraction=1.0, success=False, error=type(e).__name__)
            )
    return report


def run_protocol(
    protocol: str,
    controller,
    dataset: MotionDataset,
    params: ProtocolParams = ProtocolParams(),
    seed: int = 0,
    sim_cfg: SimConfig = SimConfig(),
    fall_bank: list | None = None,
) -> list[EvalReport]:
    """Evaluate a controller under one of the four protocols.

    Returns one report per mask cell (a single cell for everything except
    the complete protocol's channel/joint sweep).
    """
    if protocol not in PROTOCOLS:
        raise SchemaError(f"unknown protocol {protocol!r}")
    rng = np.random.default_rng(seed)
    skel = dataset.skeleton
    nj = skel.joint_count
    length = _episode_lengths(dataset, params)
    clips = dataset.clips

    def imitation_episode(i, mask):
        clip = clips[i % len(clips)]
        directive = dv.Directive(
            track=dv.TargetTrack.from_clip(clip, 0, length), mask=mask, horizon=params.horizon
        )
        return directive, clip.frame(0)

    if protocol == "imitate":
        mask = dv.full_pose_mask(nj)
        episodes = [imitation_episode(i, mask) for i in range(params.n_episodes)]
        report = EvalReport("imitate", mask.describe(), DEFAULT_BUDGET)
        return [_run_cell(report, controller, dataset, sim_cfg, episodes)]

    if protocol == "catchup":
        if fall_bank is None:
            fall_bank = generate_fall_bank(dataset, sim_cfg, params.fall_bank_size, seed=seed + 1)
        mask = dv.full_pose_mask(nj)
        episodes = []
        spec = dv.EpisodeSpec(length=length, horizon=params.horizon)
        for i in range(params.n_episodes):
            segments = []
            for _ in range(2):
                ci = int(rng.integers(len(clips)))
                lo = min(spec.subseq_min, len(clips[ci]))
                hi = min(spec.subseq_max, len(clips[ci]))
                sub = int(rng.integers(lo, hi + 1))
                start = int(rng.integers(len(clips[ci]) - sub + 1))
                yaw = float(rng.uniform(0, 2 * np.pi))
                segments.append((ci, start, sub, yaw))
            plan = dv.EpisodePlan(segments=segments, menu_index=0, mask=mask, joint_mask_applied=False)
            directive = dv.realize_plan(dataset, plan, spec)
            initial = sample_initial_pose(dataset, fall_bank, 0.5, rng)
            episodes.append((directive, initial))
        report = EvalReport("catchup", mask.describe(), CATCHUP_BUDGET)
        return [_run_cell(report, controller, dataset, sim_cfg, episodes)]

    if protocol == "combine":
        mask = dv.full_pose_mask(nj)
        spec = AugmentSpec.for_skeleton(skel)
        episodes = []
        for i in range(params.n_episodes):
            li, ui = int(rng.integers(len(clips))), int(rng.integers(len(clips)))
            combo = combine_upper_lower(clips[li], clips[ui], length, spec)
            directive = dv.Directive(
                track=dv.TargetTrack.from_clip(combo), mask=mask, horizon=params.horizon
            )
            episodes.append((directive, combo.frame(0)))
        report = EvalReport("combine", mask.describe(), DEFAULT_BUDGET)
        return [_run_cell(report, controller, dataset, sim_cfg, episodes)]

    # complete: the channel-mask menu, then progressive joint masking on G
    reports = []
    for name, mask in zip(dv.MENU_NAMES, dv.channel_mask_menu(nj)):
        episodes = [imitation_episode(i, mask) for i in range(params.n_episodes)]
        report = EvalReport("complete", f"channel:{name}", DEFAULT_BUDGET)
        reports.append(_run_cell(report, controller, dataset, sim_cfg, episodes))
    for fraction in params.joint_fractions:
        episodes = []
        for i in range(params.n_episodes):
            jm = dv.sample_joint_mask(rng, nj, percent=fraction * 100.0)
            mask = dv.DirectiveMask(frozenset({dv.G}), jm)
            episodes.append(imitation_episode(i, mask))
        report = EvalReport("complete", f"gmask:{fraction:g}", DEFAULT_BUDGET)
        reports.append(_run_cell(report, controller, dataset, sim_cfg, episodes))
    return reports

def evaluate_tracking(
    controller,
    mplus: MotionDataset,
    fall_bank: list,
    episodes: int = 12,
    seed: int = 99,
    p_fall: float = 0.1,
    spec: dv.EpisodeSpec = dv.EpisodeSpec(),
    sim_cfg: SimConfig = SimConfig(),
    tracking: "TrackingConfig" = None,
):
    """Mean tracking-reward terms of a controller on the episode
    distribution, using deterministic actions (no exploration noise).

    Returns (r_h, r_o, r_v, r_l) means over all steps of all episodes.
    """
    from .rewards import TrackingConfig, tracking_reward

    tracking = tracking or TrackingConfig()
    skel = mplus.skeleton
    rng = np.random.default_rng(seed)
    total = np.zeros(4)
    steps = 0
    for _ in range(episodes):
        pose = sample_initial_pose(mplus, fall_bank, p_fall, rng)
        directive = dv.build_episode_directive(mplus, spec, rng)
        sim = BatchSim(skel, sim_cfg, 1)
        sim.reset_env(0, pose)
        cur = sim.poses()[0]
        for t in range(spec.length):
            action = controller.act(cur, directive, t)
            sim.step(action[None])
            cur = sim.poses()[0]
            total += tracking_reward(cur, directive.target_pose(t + 1), directive.mask, tracking)
            steps += 1
    return total / steps
