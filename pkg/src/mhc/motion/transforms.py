"""World-frame (in-plane) transforms of poses and clips."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import rotations as rot
from .clip import MotionClip
from .pose import Pose


def _rotate_world(yaw: float, pivot, root_pos, root_rot6d, lin_vel, ang_vel, joint_global):
    """Rotate world-frame channels by ``yaw`` about the vertical axis through pivot."""
    rz = rot.rotz(yaw)
    pivot3 = np.array([pivot[0], pivot[1], 0.0])
    root_mat = rot.sixd_to_matrix(root_rot6d)
    new_pos = (root_pos - pivot3) @ rz.T + pivot3
    new_rot6d = rot.matrix_to_sixd_unchecked(np.einsum("ab,...bc->...ac", rz, root_mat))
    new_lin = lin_vel @ rz.T
    new_ang = ang_vel @ rz.T
    new_glob = (joint_global - pivot3) @ rz.T + pivot3
    return new_pos, new_rot6d, new_lin, new_ang, new_glob


def rotate_pose(pose: Pose, yaw: float, pivot=None) -> Pose:
    """In-plane rotation of a single pose; see apply_inplane_rotation."""
    if pivot is None:
        pivot = pose.root_pos[:2]
    new_pos, new_rot6d, new_lin, new_ang, new_glob = _rotate_world(
        yaw, pivot, pose.root_pos, pose.root_rot6d, pose.lin_vel, pose.ang_vel, pose.joint_global
    )
    return Pose(
        root_pos=new_pos,
        root_rot6d=new_rot6d,
        lin_vel=new_lin,
        ang_vel=new_ang,
        joint_rot6d=pose.joint_rot6d,
        joint_local=pose.joint_local,
        joint_global=new_glob,
    )


def apply_inplane_rotation(clip: MotionClip, yaw: float, pivot) -> MotionClip:
    """Rotate all world-frame channels by ``yaw`` about the vertical axis
    through ``pivot`` (2D point).

    Joint rotations and root-relative positions are untouched; heights are
    preserved.  yaw == 0.0 returns the clip unchanged bitwise.
    """
    if yaw == 0.0:
        return clip
    new_pos, new_rot6d, new_lin, new_ang, new_glob = _rotate_world(
        yaw, pivot, clip.root_pos, clip.root_rot6d, clip.lin_vel, clip.ang_vel, clip.joint_global
    )
    return replace(
        clip,
        root_pos=new_pos,
        root_rot6d=new_rot6d,
        lin_vel=new_lin,
        ang_vel=new_ang,
        joint_global=new_glob,
    )
