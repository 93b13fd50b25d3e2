"""Pose representation and forward kinematics.

A pose carries four channels: the root channel (position, orientation,
linear and angular velocity), per-joint rotations in 6D form, root-relative
joint positions, and global joint positions.  Root-relative means the full
root frame is removed: local = R_root^T (global - p_root).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels as K
from ..errors import NotARotation
from . import rotations as rot
from .skeleton import SkeletonSpec


def forward_kinematics(skel: SkeletonSpec, root_pos, root_rot6d, joint_rot6d):
    """Joint positions implied by the root channel and joint rotations.

    Accepts leading batch dimensions on all pose arguments.
    Returns (joint_global, joint_local), both (..., J, 3).
    """
    root_pos = np.asarray(root_pos, dtype=np.float64)
    mats = rot.sixd_to_matrix(joint_rot6d)
    local = K.fk_chain(skel.parents, skel.offsets, mats)
    root_mat = rot.sixd_to_matrix(root_rot6d)
    glob = root_pos[..., None, :] + np.einsum("...ab,...jb->...ja", root_mat, local)
    return glob, local


@dataclass(frozen=True)
class Pose:
    """One frame of humanoid state."""

    root_pos: np.ndarray  # (3,) m
    root_rot6d: np.ndarray  # (6,)
    lin_vel: np.ndarray  # (3,) m/s
    ang_vel: np.ndarray  # (3,) rad/s
    joint_rot6d: np.ndarray  # (J, 6)
    joint_local: np.ndarray  # (J, 3) root-relative m
    joint_global: np.ndarray  # (J, 3) world m

    def __post_init__(self):
        for name in ("root_pos", "root_rot6d", "lin_vel", "ang_vel", "joint_rot6d", "joint_local", "joint_global"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def height(self) -> float:
        """Root height above the ground plane (z component of the root)."""
        return float(self.root_pos[2])

    @property
    def joint_count(self) -> int:
        return self.joint_rot6d.shape[0]

    def root_matrix(self) -> np.ndarray:
        cached = getattr(self, "_root_mat", None)
        if cached is None:
            cached = rot.sixd_to_matrix_unchecked(self.root_rot6d)
            object.__setattr__(self, "_root_mat", cached)
        return cached

    @classmethod
    def from_kinematics(cls, skel: SkeletonSpec, root_pos, root_rot6d, lin_vel, ang_vel, joint_rot6d) -> "Pose":
        """Build a self-consistent pose, deriving both position channels."""
        glob, local = forward_kinematics(skel, root_pos, root_rot6d, joint_rot6d)
        return cls(
            root_pos=np.array(root_pos, dtype=np.float64),
            root_rot6d=np.array(root_rot6d, dtype=np.float64),
            lin_vel=np.array(lin_vel, dtype=np.float64),
            ang_vel=np.array(ang_vel, dtype=np.float64),
            joint_rot6d=np.array(joint_rot6d, dtype=np.float64),
            joint_local=local,
            joint_global=glob,
        )

    def validate(self, skel: SkeletonSpec, tol: float = 1e-6) -> None:
        """Check self-consistency: decodable 6D blocks and FK agreement."""
        for block in (self.root_rot6d, self.joint_rot6d):
            m = rot.sixd_to_matrix(block)
            det = np.linalg.det(m)
            if np.any(np.abs(det - 1.0) > 1e-6):
                raise NotARotation("6D block decodes with det != +1")
        glob, local = forward_kinematics(skel, self.root_pos, self.root_rot6d, self.joint_rot6d)
        if np.max(np.abs(glob - self.joint_global)) > tol:
            raise NotARotation(f"joint_global inconsistent with FK beyond {tol}")
        if np.max(np.abs(local - self.joint_local)) > tol:
            raise NotARotation(f"joint_local inconsistent with FK beyond {tol}")


def rest_pose(skel: SkeletonSpec, yaw: float = 0.0) -> Pose:
    """Identity-joint standing pose with the feet exactly on the ground."""
    nj = skel.joint_count
    joint_rot6d = np.tile(rot.IDENTITY_6D, (nj, 1))
    root_rot6d = rot.matrix_to_sixd(rot.rotz(yaw))
    local = K.fk_chain(skel.parents, skel.offsets, rot.sixd_to_matrix(joint_rot6d))
    height = max(0.0, -float(np.min(local[:, 2])))
    return Pose.from_kinematics(
        skel,
        root_pos=np.array([0.0, 0.0, height]),
        root_rot6d=root_rot6d,
        lin_vel=np.zeros(3),
        ang_vel=np.zeros(3),
        joint_rot6d=joint_rot6d,
    )
