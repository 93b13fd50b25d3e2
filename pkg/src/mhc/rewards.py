"""Per-step reward: prioritized tracking terms, style mixing, energy cost.

The four tracking terms cover root height, root orientation, root velocity
(planar linear velocity plus yaw rate) and joint positions, in that
priority order: a term is active only while every higher-priority term
exceeds the gate threshold.  Mask flags zero the exponents of terms whose
pose information the directive does not select, so unselected terms sit at
their maximum and never shape preferences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .directives import DirectiveMask, L
from .motion import rotations as rot
from .motion.pose import Pose


@dataclass(frozen=True)
class TrackingConfig:
    gate_threshold: float = 0.9
    height_scale: float = 8.0
    joint_scale: float = 40.0
    tracking_weight: float = 0.5
    style_weight: float = 0.5
    action_delta_coeff: float = 0.01
    torque_coeff: float = 0.0002

    def __post_init__(self):
        if not 0.0 < self.gate_threshold < 1.0:
            raise ValueError("gate_threshold must lie in (0, 1)")
        if self.height_scale <= 0 or self.joint_scale <= 0:
            raise ValueError("scales must be positive")


@dataclass
class RewardBreakdown:
    r_h: float
    r_o: float
    r_v: float
    r_l: float
    style_parts: np.ndarray  # (5,)
    r_st: float
    energy: float

    @property
    def r_tr(self) -> float:
        return self.r_h + self.r_o + self.r_v + self.r_l

    def total(self, cfg: TrackingConfig) -> float:
        return total_reward(self.r_tr, self.r_st, self.energy, cfg)


def _velocity_vector(pose: Pose) -> np.ndarray:
    """Planar linear velocity plus yaw rate, the joystick-facing triplet."""
    return np.array([pose.lin_vel[0], pose.lin_vel[1], pose.ang_vel[2]])


def tracking_reward(
    pose: Pose, target: Pose, mask: DirectiveMask, cfg: TrackingConfig = TrackingConfig()
):
    """The four prioritized tracking terms (r_h, r_o, r_v, r_l)."""
    m_h = 1.0 if mask.selects_height else 0.0
    m_o = 1.0 if mask.selects_orientation else 0.0
    m_v = 1.0 if mask.selects_velocity else 0.0

    r_h = float(np.exp(-m_h * cfg.height_scale * abs(pose.height - target.height)))

    gate = cfg.gate_threshold
    if r_h > gate:
        d = rot.geodesic_angle(pose.root_matrix(), target.root_matrix())
        r_o = float(np.exp(-m_o * d))
    else:
        r_o = 0.0

    if r_o > gate:
        dv = np.linalg.norm(_velocity_vector(pose) - _velocity_vector(target))
        r_v = float(np.exp(-m_v * dv))
    else:
        r_v = 0.0

    if r_v > gate:
        channel = mask.position_channel
        selected = mask.joint_mask if channel is not None else np.zeros(0, dtype=bool)
        if channel is None or not selected.any():
            r_l = 1.0  # vacuous joint term passes at its maximum
        else:
            if channel == L:
                err = pose.joint_local - target.joint_local
            else:
                err = pose.joint_global - target.joint_global
            dist = np.linalg.norm(err[selected], axis=-1)
            r_l = float(np.mean(np.exp(-cfg.joint_scale * dist)))
    else:
        r_l = 0.0

    return r_h, r_o, r_v, r_l


def energy_cost(action, prev_action, torques, cfg: TrackingConfig = TrackingConfig()) -> float:
    """Action-rate and torque penalty (L1 over all joint components)."""
    action = np.asarray(action, dtype=np.float64)
    prev_action = np.asarray(prev_action, dtype=np.float64)
    torques = np.asarray(torques, dtype=np.float64)
    if action.shape != prev_action.shape:
        raise ValueError("action and prev_action shapes differ")
    return float(
        cfg.action_delta_coeff * np.sum(np.abs(action - prev_action))
        + cfg.torque_coeff * np.sum(np.abs(torques))
    )


def total_reward(r_tr: float, r_st: float, energy: float, cfg: TrackingConfig = TrackingConfig()) -> float:
    return cfg.tracking_weight * r_tr + cfg.style_weight * r_st - energy
