"""Simulator configuration: rates, PD gains, and the root-model constants."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import SchemaError


@dataclass(frozen=True)
class SimConfig:
    control_hz: int = 30
    sim_hz: int = 60
    kp: float = 60.0  # N*m/rad, broadcast per joint unless overridden
    kd: float = 4.0  # N*m*s/rad
    torque_limit: float = 80.0  # N*m, per torque component
    joint_damping: float = 2.0  # passive damping on top of the PD kd
    joint_inertia: float = 0.2  # kg*m^2 per joint rotor
    gravity: float = 9.81
    ground_height: float = 0.0
    fall_height_threshold: float = 0.3  # m
    fall_tilt_threshold_deg: float = 60.0
    action_limit: float = 2.5  # rad, norm clamp on joint setpoints

    # Root-model constants (see the substep kernel docstring).
    contact_friction: float = 0.9  # velocity retention per contact substep
    drive_gain: float = 8.0  # stance-hip sweep -> planar acceleration
    yaw_gain: float = 3.0  # stance-hip twist rate -> yaw acceleration
    yaw_drag: float = 4.0
    steer_gain: float = 12.0  # stance-hip twist angle -> yaw acceleration
    attitude_gain: float = 30.0  # righting spring when supported
    attitude_damping: float = 8.0
    tip_gain: float = 9.0  # toppling acceleration when unsupported
    com_ref: float = 0.5  # m, scales the center-of-mass toppling term
    foot_clearance_ref: float = 0.1  # m, foot this high contributes no support
    support_height_ref: float = 0.315  # m, feet this far below the root give full support
    divergence_limit: float = 1e6

    def __post_init__(self):
        if self.sim_hz % self.control_hz != 0:
            raise SchemaError("sim_hz must be an integer multiple of control_hz")
        if min(self.kp, self.kd, self.torque_limit) <= 0:
            raise SchemaError("kp, kd and torque_limit must be positive")

    @property
    def substeps(self) -> int:
        return self.sim_hz // self.control_hz

    @property
    def dt(self) -> float:
        return 1.0 / self.sim_hz

    @property
    def fall_tilt_threshold(self) -> float:
        return np.deg2rad(self.fall_tilt_threshold_deg)

    def gain_arrays(self, joint_count: int):
        kp = np.full(joint_count, self.kp, dtype=np.float64)
        kd = np.full(joint_count, self.kd, dtype=np.float64)
        tlim = np.full(joint_count, self.torque_limit, dtype=np.float64)
        return kp, kd, tlim

    def pack_scalars(self, leg_length: float) -> np.ndarray:
        """The float64 config vector consumed by the substep kernel."""
        return np.array(
            [
                self.dt,
                self.joint_damping,
                self.joint_inertia,
                self.gravity,
                self.ground_height,
                self.contact_friction,
                self.drive_gain,
                leg_length,
                self.yaw_gain,
                self.yaw_drag,
                self.steer_gain,
                self.attitude_gain,
                self.attitude_damping,
                self.tip_gain,
                self.com_ref,
                self.foot_clearance_ref,
                self.support_height_ref,
                self.divergence_limit,
            ],
            dtype=np.float64,
        )

    def with_overrides(self, **kw) -> "SimConfig":
        return replace(self, **kw)
