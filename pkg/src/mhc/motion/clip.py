"""Motion clips: frame arrays, JSON interchange, consistency validation.

Clip files use schema ``mhc-clip/1``: position channels are optional on
disk; the loader recomputes them from the root channel and joint rotations
via FK when absent and validates them (1e-4 m) when present, so there is a
single source of truth for joint positions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import NotARotation, SchemaError
from . import rotations as rot
from .pose import Pose, forward_kinematics
from .skeleton import SkeletonSpec

CLIP_SCHEMA = "mhc-clip/1"
SOURCE_TAGS = ("raw", "combined", "generated")

# Documented tolerance for velocity/position agreement: 2 cm/s at 30 fps.
VEL_CONSISTENCY_TOL = 0.02
FK_LOAD_TOL = 1e-4


@dataclass
class MotionClip:
    """A fixed-rate sequence of poses sharing one skeleton."""

    name: str
    fps: float
    skeleton: SkeletonSpec
    root_pos: np.ndarray  # (T, 3)
    root_rot6d: np.ndarray  # (T, 6)
    lin_vel: np.ndarray  # (T, 3)
    ang_vel: np.ndarray  # (T, 3)
    joint_rot6d: np.ndarray  # (T, J, 6)
    joint_local: np.ndarray  # (T, J, 3)
    joint_global: np.ndarray  # (T, J, 3)
    source: str = "raw"

    def __post_init__(self):
        if self.fps <= 0:
            raise SchemaError("fps must be positive")
        if self.source not in SOURCE_TAGS:
            raise SchemaError(f"unknown source tag {self.source!r}")
        t = self.root_pos.shape[0]
        nj = self.skeleton.joint_count
        shapes = {
            "root_pos": (t, 3),
            "root_rot6d": (t, 6),
            "lin_vel": (t, 3),
            "ang_vel": (t, 3),
            "joint_rot6d": (t, nj, 6),
            "joint_local": (t, nj, 3),
            "joint_global": (t, nj, 3),
        }
        for key, shape in shapes.items():
            arr = np.ascontiguousarray(getattr(self, key), dtype=np.float64)
            if arr.shape != shape:
                raise SchemaError(f"{key} has shape {arr.shape}, expected {shape}")
            setattr(self, key, arr)

    def __len__(self) -> int:
        return self.root_pos.shape[0]

    def frame(self, i: int) -> Pose:
        return Pose(
            root_pos=self.root_pos[i],
            root_rot6d=self.root_rot6d[i],
            lin_vel=self.lin_vel[i],
            ang_vel=self.ang_vel[i],
            joint_rot6d=self.joint_rot6d[i],
            joint_local=self.joint_local[i],
            joint_global=self.joint_global[i],
        )

    def frames(self) -> list[Pose]:
        return [self.frame(i) for i in range(len(self))]

    def slice(self, start: int, stop: int, name: str | None = None) -> "MotionClip":
        return replace(
            self,
            name=name or f"{self.name}[{start}:{stop}]",
            root_pos=self.root_pos[start:stop].copy(),
            root_rot6d=self.root_rot6d[start:stop].copy(),
            lin_vel=self.lin_vel[start:stop].copy(),
            ang_vel=self.ang_vel[start:stop].copy(),
            joint_rot6d=self.joint_rot6d[start:stop].copy(),
            joint_local=self.joint_local[start:stop].copy(),
            joint_global=self.joint_global[start:stop].copy(),
        )

    @classmethod
    def from_channels(
        cls,
        name: str,
        fps: float,
        skeleton: SkeletonSpec,
        root_pos,
        root_rot6d,
        lin_vel,
        ang_vel,
        joint_rot6d,
        source: str = "raw",
    ) -> "MotionClip":
        """Build a clip from the root channel + joint rotations, FK the rest."""
        glob, local = forward_kinematics(skeleton, root_pos, root_rot6d, joint_rot6d)
        return cls(
            name=name,
            fps=fps,
            skeleton=skeleton,
            root_pos=np.asarray(root_pos, dtype=np.float64),
            root_rot6d=np.asarray(root_rot6d, dtype=np.float64),
            lin_vel=np.asarray(lin_vel, dtype=np.float64),
            ang_vel=np.asarray(ang_vel, dtype=np.float64),
            joint_rot6d=np.asarray(joint_rot6d, dtype=np.float64),
            joint_local=local,
            joint_global=glob,
            source=source,
        )

    def validate(self, vel_tol: float = VEL_CONSISTENCY_TOL) -> None:
        """Check FK consistency and velocity/position agreement.

        Linear velocity is compared against central differences of the root
        position (one-sided at the ends); the documented tolerance is
        2 cm/s at 30 fps.
        """
        glob, local = forward_kinematics(self.skeleton, self.root_pos, self.root_rot6d, self.joint_rot6d)
        if np.max(np.abs(glob - self.joint_global)) > FK_LOAD_TOL:
            raise NotARotation(f"joint_global drifts from FK beyond {FK_LOAD_TOL}")
        if np.max(np.abs(local - self.joint_local)) > FK_LOAD_TOL:
            raise NotARotation(f"joint_local drifts from FK beyond {FK_LOAD_TOL}")
        if len(self) >= 3:
            # interior frames only: slicing a clip leaves one-sided ends
            fd = (self.root_pos[2:] - self.root_pos[:-2]) * (self.fps / 2.0)
            err = np.max(np.linalg.norm(fd - self.lin_vel[1:-1], axis=-1))
            if err > vel_tol:
                raise SchemaError(f"root velocity disagrees with finite differences by {err:.4f} m/s")

    def to_json_dict(self, include_positions: bool = True) -> dict:
        frames = []
        for i in range(len(self)):
            rec = {
                "root": {
                    "pos": self.root_pos[i].tolist(),
                    "rot6d": self.root_rot6d[i].tolist(),
                    "lin_vel": self.lin_vel[i].tolist(),
                    "ang_vel": self.ang_vel[i].tolist(),
                },
                "joint_rot6d": self.joint_rot6d[i].tolist(),
            }
            if include_positions:
                rec["joint_local_pos"] = self.joint_local[i].tolist()
                rec["joint_global_pos"] = self.joint_global[i].tolist()
            frames.append(rec)
        return {
            "schema": CLIP_SCHEMA,
            "name": self.name,
            "fps": self.fps,
            "skeleton": self.skeleton.name,
            "source": self.source,
            "frames": frames,
        }

    @classmethod
    def from_json_dict(cls, doc: dict, skeleton: SkeletonSpec) -> "MotionClip":
        if doc.get("schema") != CLIP_SCHEMA:
            raise SchemaError(f"expected schema {CLIP_SCHEMA!r}, got {doc.get('schema')!r}")
        if doc.get("skeleton") != skeleton.name:
            raise SchemaError(
                f"clip skeleton {doc.get('skeleton')!r} does not match {skeleton.name!r}"
            )
        frames = doc.get("frames", [])
        if not frames:
            raise SchemaError("clip has no frames")
        try:
            root_pos = np.array([f["root"]["pos"] for f in frames], dtype=np.float64)
            root_rot6d = np.array([f["root"]["rot6d"] for f in frames], dtype=np.float64)
            lin_vel = np.array([f["root"]["lin_vel"] for f in frames], dtype=np.float64)
            ang_vel = np.array([f["root"]["ang_vel"] for f in frames], dtype=np.float64)
            joint_rot6d = np.array([f["joint_rot6d"] for f in frames], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"malformed clip frame: {e}") from e

        glob, local = forward_kinematics(skeleton, root_pos, root_rot6d, joint_rot6d)
        if "joint_local_pos" in frames[0]:
            stored = np.array([f["joint_local_pos"] for f in frames], dtype=np.float64)
            if np.max(np.abs(stored - local)) > FK_LOAD_TOL:
                raise SchemaError("stored joint_local_pos disagrees with FK")
        if "joint_global_pos" in frames[0]:
            stored = np.array([f["joint_global_pos"] for f in frames], dtype=np.float64)
            if np.max(np.abs(stored - glob)) > FK_LOAD_TOL:
                raise SchemaError("stored joint_global_pos disagrees with FK")

        return cls(
            name=doc.get("name", "clip"),
            fps=float(doc["fps"]),
            skeleton=skeleton,
            root_pos=root_pos,
            root_rot6d=root_rot6d,
            lin_vel=lin_vel,
            ang_vel=ang_vel,
            joint_rot6d=joint_rot6d,
            joint_local=local,
            joint_global=glob,
            source=doc.get("source", "raw"),
        )

    def save(self, path, include_positions: bool = True) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(include_positions)) + "\n")

    @classmethod
    def load(cls, path, skeleton: SkeletonSpec) -> "MotionClip":
        return cls.from_json_dict(json.loads(Path(path).read_text()), skeleton)
