"""Fallen-pose bank and episode initial-pose sampling.

The bank is generated procedurally: characters are dropped from randomized
dataset poses with an angular kick, simulated for two seconds under a hold
action, and the resulting rest poses are kept when they register as fallen.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..errors import EmptyBank
from ..motion.pose import Pose
from ..motion.skeleton import SkeletonSpec
from ..motion.transforms import rotate_pose
from ..simcore.config import SimConfig
from ..simcore.engine import BatchSim
from .dataset import MotionDataset


def _with_velocities(pose: Pose, lin_vel, ang_vel) -> Pose:
    return Pose(
        root_pos=pose.root_pos,
        root_rot6d=pose.root_rot6d,
        lin_vel=np.asarray(lin_vel, dtype=np.float64),
        ang_vel=np.asarray(ang_vel, dtype=np.float64),
        joint_rot6d=pose.joint_rot6d,
        joint_local=pose.joint_local,
        joint_global=pose.joint_global,
    )


def generate_fall_bank(
    mplus: MotionDataset,
    cfg: SimConfig,
    count: int,
    seed: int,
    settle_time: float = 2.0,
    max_rounds: int = 20,
) -> list[Pose]:
    """Drop characters from randomized dataset poses and keep the fallen rest
    poses.  Deterministic for a given seed."""
    skel = mplus.skeleton
    rng = np.random.default_rng(seed)
    bank: list[Pose] = []
    steps = int(round(settle_time * cfg.control_hz))
    for _ in range(max_rounds):
        if len(bank) >= count:
            break
        sim = BatchSim(skel, cfg, count)
        for e in range(count):
            pose = mplus.sample_frame(rng)
            direction = rng.uniform(0.0, 2.0 * np.pi)
            speed = rng.uniform(2.0, 5.0)
            kick = np.array([speed * np.cos(direction), speed * np.sin(direction), 0.0])
            start = _with_velocities(pose, np.zeros(3), kick)
            sim.reset_env(e, start)
        hold = sim.prev_action.copy()
        for _ in range(steps):
            sim.step(hold)
        fallen = sim.fallen()
        for e, pose in enumerate(sim.poses()):
            if fallen[e] and len(bank) < count:
                bank.append(_with_velocities(pose, np.zeros(3), np.zeros(3)))
    if not bank:
        raise EmptyBank("no fallen rest poses could be generated")
    return bank


def sample_initial_pose(
    mplus: MotionDataset,
    fall_bank: list[Pose],
    p_fall_weight: float,
    rng: np.random.Generator,
) -> Pose:
    """Mixture of dataset poses and fallen poses, then a uniform random yaw.

    With probability ``p_fall_weight`` a fallen pose is drawn uniformly from
    the bank, otherwise a pose is drawn uniformly over all dataset frames;
    either way a random in-plane rotation about the pose's own root is
    applied.
    """
    if p_fall_weight > 0.0 and not fall_bank:
        raise EmptyBank("fall bank is empty but p_fall_weight > 0")
    if rng.uniform() < p_fall_weight:
        pose = fall_bank[int(rng.integers(len(fall_bank)))]
    else:
        pose = mplus.sample_frame(rng)
    yaw = rng.uniform(0.0, 2.0 * np.pi)
    return rotate_pose(pose, yaw)
