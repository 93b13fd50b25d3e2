"""Procedural desk-scale motion clips.

Clips are generated from parametric joint-angle curves at 30 fps with the
root pinned to a straight-line trajectory; the root height follows the leg
geometry so the lowest foot touches the ground on every frame.  Velocities
are central differences of the generated positions, so every clip passes
the consistency validator exactly.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels as K
from ..motion import rotations as rot
from ..motion.clip import MotionClip
from ..motion.skeleton import SkeletonSpec

FPS = 30.0

_J = {
    "torso": 0,
    "head": 1,
    "right_shoulder": 2,
    "right_elbow": 3,
    "right_hand": 4,
    "left_shoulder": 5,
    "left_elbow": 6,
    "left_hand": 7,
    "right_hip": 8,
    "right_knee": 9,
    "right_foot": 10,
    "left_hip": 11,
    "left_knee": 12,
    "left_foot": 13,
}


def _gait_angles(t, period, hip_amp, knee_amp, arm_amp, hip_base=0.0, knee_base=0.0):
    """Leg/arm curves for one stride: (J, 3) expmap angles per frame t (s)."""
    nj = 14
    ang = np.zeros((len(t), nj, 3))
    omega = 2.0 * np.pi / period
    for side, phase in (("right", 0.0), ("left", np.pi)):
        swing = np.sin(omega * t + phase)
        # stance hip sweeps back (+y), swing knee tucks the foot up (+y)
        ang[:, _J[f"{side}_hip"], 1] = hip_base - hip_amp * swing
        lift = np.maximum(0.0, np.cos(omega * t + phase))
        ang[:, _J[f"{side}_knee"], 1] = knee_base + knee_amp * lift * lift
        # arms counter-swing their own side's leg
        ang[:, _J[f"{side}_shoulder"], 1] = arm_amp * swing
        ang[:, _J[f"{side}_elbow"], 1] = 0.3 * arm_amp * (1.0 + swing)
    ang[:, _J["torso"], 0] = 0.04 * np.sin(omega * t)
    return ang


def _standing_legs(ang):
    return ang


def _angles_to_clip(skel: SkeletonSpec, name: str, ang: np.ndarray, speed: float) -> MotionClip:
    """Assemble a clip from expmap angles: root on a straight line, feet grounded."""
    t = ang.shape[0]
    mats = K.expmap_to_mat(ang)
    joint_rot6d = rot.matrix_to_sixd_unchecked(mats)
    local = K.fk_chain(skel.parents, skel.offsets, mats)
    foot_z = local[:, skel.foot_joints, 2]
    height = -np.min(foot_z, axis=-1)
    root_pos = np.zeros((t, 3))
    root_pos[:, 0] = speed * np.arange(t) / FPS
    root_pos[:, 2] = height
    lin_vel = np.gradient(root_pos, 1.0 / FPS, axis=0)
    return MotionClip.from_channels(
        name=name,
        fps=FPS,
        skeleton=skel,
        root_pos=root_pos,
        root_rot6d=np.tile(rot.IDENTITY_6D, (t, 1)),
        lin_vel=lin_vel,
        ang_vel=np.zeros((t, 3)),
        joint_rot6d=joint_rot6d,
        source="generated",
    )


def make_clip(skel: SkeletonSpec, name: str, length: int = 300) -> MotionClip:
    t = np.arange(length) / FPS
    if name == "walk":
        ang = _gait_angles(t, period=1.0, hip_amp=0.5, knee_amp=0.7, arm_amp=0.3)
        return _angles_to_clip(skel, name, ang, speed=1.2)
    if name == "run":
        ang = _gait_angles(t, period=0.6, hip_amp=0.75, knee_amp=1.1, arm_amp=0.55, knee_base=0.15)
        return _angles_to_clip(skel, name, ang, speed=2.5)
    if name == "crouch_walk":
        ang = _gait_angles(
            t, period=1.2, hip_amp=0.35, knee_amp=0.5, arm_amp=0.2, hip_base=-0.9, knee_base=1.3
        )
        return _angles_to_clip(skel, name, ang, speed=1.0)
    if name == "idle":
        ang = np.zeros((length, 14, 3))
        sway = 0.05 * np.sin(2.0 * np.pi * t / 3.0)
        ang[:, _J["torso"], 0] = sway
        ang[:, _J["right_shoulder"], 1] = 0.08 * np.sin(2.0 * np.pi * t / 3.0 + 0.7)
        ang[:, _J["left_shoulder"], 1] = 0.08 * np.sin(2.0 * np.pi * t / 3.0 + 2.1)
        return _angles_to_clip(skel, name, ang, speed=0.0)
    if name == "wave":
        ang = np.zeros((length, 14, 3))
        # right arm raised sideways overhead, forearm oscillating
        ang[:, _J["right_shoulder"], 0] = -2.4
        ang[:, _J["right_elbow"], 2] = 0.6 * np.sin(2.0 * np.pi * t / 0.8)
        ang[:, _J["torso"], 0] = 0.03 * np.sin(2.0 * np.pi * t / 3.0)
        return _angles_to_clip(skel, name, ang, speed=0.0)
    if name == "arm_raise":
        ang = np.zeros((length, 14, 3))
        lift = 0.25 + 1.1 * 0.5 * (1.0 - np.cos(2.0 * np.pi * t / 4.0))
        ang[:, _J["right_shoulder"], 0] = -lift
        ang[:, _J["left_shoulder"], 0] = lift
        return _angles_to_clip(skel, name, ang, speed=0.0)
    raise ValueError(f"unknown synthetic clip {name!r}")


CLIP_NAMES = ("walk", "run", "wave", "idle", "crouch_walk", "arm_raise")


def make_clips(skel: SkeletonSpec, names=CLIP_NAMES, length: int = 300) -> list[MotionClip]:
    return [make_clip(skel, n, length) for n in names]
