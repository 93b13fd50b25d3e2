"""Reduced deterministic articulated-humanoid simulator.

Joint rotors under PD control integrate at sim_hz with semi-implicit Euler
while the root follows the closed-form support/drive model documented on
the substep kernel.  A batch of environments advances in lockstep through
the same kernels, so single-env stepping is the E=1 special case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels as K
from ..errors import NumericalDivergence
from ..motion import rotations as rot
from ..motion.pose import Pose
from ..motion.skeleton import SkeletonSpec
from .config import SimConfig


@dataclass
class StepInfo:
    """Per-control-step actuation record used by the energy cost."""

    torques: np.ndarray  # (J, 3) substep-averaged applied torques
    action_delta: np.ndarray  # (J, 3) setpoint change from the previous step


@dataclass
class SimState:
    """Single-environment state snapshot (a BatchSim view)."""

    pose: Pose
    joint_expmap: np.ndarray  # (J, 3)
    joint_vel: np.ndarray  # (J, 3)
    prev_action: np.ndarray  # (J, 3)
    time: float
    fallen: bool


def detect_fall(pose: Pose, cfg: SimConfig) -> bool:
    """Fallen when the root is low or the torso tilts past the threshold."""
    if pose.height < cfg.fall_height_threshold:
        return True
    tilt = rot.tilt_of_matrix(pose.root_matrix())
    return bool(tilt > cfg.fall_tilt_threshold)


class BatchSim:
    """A fixed-size batch of independent environments stepped in lockstep."""

    def __init__(self, skel: SkeletonSpec, cfg: SimConfig, n_envs: int):
        self.skel = skel
        self.cfg = cfg
        self.n_envs = n_envs
        nj = skel.joint_count
        self.root_pos = np.zeros((n_envs, 3))
        self.root_quat = np.tile([1.0, 0.0, 0.0, 0.0], (n_envs, 1))
        self.root_vel = np.zeros((n_envs, 3))
        self.root_angvel = np.zeros((n_envs, 3))
        self.joint_quat = np.zeros((n_envs, nj, 4))
        self.joint_quat[..., 0] = 1.0
        self.joint_vel = np.zeros((n_envs, nj, 3))
        self.prev_action = np.zeros((n_envs, nj, 3))
        self.steps = np.zeros(n_envs, dtype=np.int64)
        self._kp, self._kd, self._tlim = cfg.gain_arrays(nj)
        self._scal = cfg.pack_scalars(skel.leg_length)

    # -- initialization ----------------------------------------------------

    def reset_env(self, e: int, pose: Pose) -> None:
        """Initialize environment ``e`` from a pose; joint rates start at zero
        and the previous action holds the current joint angles."""
        self.root_pos[e] = pose.root_pos
        self.root_quat[e] = K.quat_from_mat(rot.sixd_to_matrix(pose.root_rot6d))
        self.root_vel[e] = pose.lin_vel
        self.root_angvel[e] = pose.ang_vel
        self.joint_quat[e] = K.quat_from_mat(rot.sixd_to_matrix(pose.joint_rot6d))
        self.joint_vel[e] = 0.0
        self.prev_action[e] = K.quat_to_expmap(self.joint_quat[e])
        self.steps[e] = 0

    # -- stepping ------------------------------------------------------------

    def clamp_actions(self, actions: np.ndarray) -> np.ndarray:
        """Norm-clamp each joint setpoint to the configured limit."""
        actions = np.asarray(actions, dtype=np.float64)
        norm = np.linalg.norm(actions, axis=-1, keepdims=True)
        scale = np.where(norm > self.cfg.action_limit, self.cfg.action_limit / np.maximum(norm, 1e-12), 1.0)
        return actions * scale

    def step(self, actions: np.ndarray) -> list[StepInfo]:
        """Hold ``actions`` (E, J, 3) over sim_hz/control_hz substeps."""
        actions = self.clamp_actions(actions)
        action_quat = K.quat_from_expmap(actions)
        torque_acc = np.zeros_like(self.joint_vel)
        n_sub = self.cfg.substeps
        for _ in range(n_sub):
            status = K.sim_substep(
                self.root_pos,
                self.root_quat,
                self.root_vel,
                self.root_angvel,
                self.joint_quat,
                self.joint_vel,
                action_quat,
                torque_acc,
                self.skel.parents,
                self.skel.offsets,
                self.skel.foot_joints,
                self.skel.hip_joints,
                self._kp,
                self._kd,
                self._tlim,
                self._scal,
            )
            if status != 0:
                raise NumericalDivergence("simulation state exceeded the divergence limit")
        self.steps += 1
        delta = actions - self.prev_action
        infos = [
            StepInfo(torques=torque_acc[e] / n_sub, action_delta=delta[e])
            for e in range(self.n_envs)
        ]
        self.prev_action = actions
        return infos

    # -- views ----------------------------------------------------------------

    def poses(self) -> list[Pose]:
        root_mat = K.quat_to_mat(self.root_quat)
        joint_mats = K.quat_to_mat(self.joint_quat)
        local = K.fk_chain(self.skel.parents, self.skel.offsets, joint_mats)
        glob = self.root_pos[:, None, :] + np.einsum("eab,ejb->eja", root_mat, local)
        root6d = rot.matrix_to_sixd_unchecked(root_mat)
        joint6d = rot.matrix_to_sixd_unchecked(joint_mats)
        # copies, not views: pose snapshots must outlive later sim steps
        return [
            Pose(
                root_pos=self.root_pos[e].copy(),
                root_rot6d=root6d[e],
                lin_vel=self.root_vel[e].copy(),
                ang_vel=self.root_angvel[e].copy(),
                joint_rot6d=joint6d[e],
                joint_local=local[e],
                joint_global=glob[e],
            )
            for e in range(self.n_envs)
        ]

    def fallen(self) -> np.ndarray:
        mats = K.quat_to_mat(self.root_quat)
        tilt = np.arccos(np.clip(mats[:, 2, 2], -1.0, 1.0))
        return (self.root_pos[:, 2] < self.cfg.fall_height_threshold) | (
            tilt > self.cfg.fall_tilt_threshold
        )

    def state(self, e: int = 0) -> SimState:
        pose = self.poses()[e]
        return SimState(
            pose=pose,
            joint_expmap=K.quat_to_expmap(self.joint_quat[e]),
            joint_vel=self.joint_vel[e].copy(),
            prev_action=self.prev_action[e].copy(),
            time=float(self.steps[e]) / self.cfg.control_hz,
            fallen=detect_fall(pose, self.cfg),
        )

    def load_state(self, e: int, state: SimState) -> None:
        self.root_pos[e] = state.pose.root_pos
        self.root_quat[e] = K.quat_from_mat(rot.sixd_to_matrix(state.pose.root_rot6d))
        self.root_vel[e] = state.pose.lin_vel
        self.root_angvel[e] = state.pose.ang_vel
        self.joint_quat[e] = K.quat_from_expmap(state.joint_expmap)
        self.joint_vel[e] = state.joint_vel
        self.prev_action[e] = state.prev_action
        self.steps[e] = int(round(state.time * self.cfg.control_hz))

    def teleport_env(self, e: int, pose: Pose) -> None:
        """Place environment ``e`` at a pose without touching its clock."""
        step = self.steps[e]
        self.reset_env(e, pose)
        self.steps[e] = step


def reset(initial: Pose, cfg: SimConfig, skel: SkeletonSpec) -> SimState:
    """Fresh single-environment state from an initial pose."""
    sim = BatchSim(skel, cfg, 1)
    sim.reset_env(0, initial)
    return sim.state(0)


def step(state: SimState, action: np.ndarray, cfg: SimConfig, skel: SkeletonSpec):
    """Pure single-environment step: returns (next state, StepInfo)."""
    sim = BatchSim(skel, cfg, 1)
    sim.load_state(0, state)
    info = sim.step(np.asarray(action, dtype=np.float64)[None])[0]
    return sim.state(0), info


def pd_torque(setpoint, angle, vel, kp: float, kd: float, limit: float) -> np.ndarray:
    """PD torque with the setpoint/angle difference taken in tangent space."""
    qa = K.quat_from_expmap(np.asarray(angle, dtype=np.float64))
    qs = K.quat_from_expmap(np.asarray(setpoint, dtype=np.float64))
    err = K.quat_to_expmap(K.quat_mul(K.quat_conj(qa), qs))
    return np.clip(kp * err - kd * np.asarray(vel, dtype=np.float64), -limit, limit)
