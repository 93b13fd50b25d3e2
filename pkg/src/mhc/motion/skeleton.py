"""Skeleton definition: joint tree, body-part labels, default character."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from ..errors import SchemaError

SKEL_SCHEMA = "mhc-skel/1"

# Body-part labels; they induce the five part sets used by the style
# discriminators and the upper/lower split used for motion combination.
UPPER_RIGHT = "UPPER_RIGHT"
UPPER_LEFT = "UPPER_LEFT"
ROOT_GROUP = "ROOT_GROUP"
LOWER = "LOWER"
PART_LABELS = (UPPER_RIGHT, UPPER_LEFT, ROOT_GROUP, LOWER)


@dataclass(frozen=True)
class Joint:
    name: str
    parent: int  # index into SkeletonSpec.joints; -1 for the root entry
    offset: tuple[float, float, float]


@dataclass(frozen=True)
class SkeletonSpec:
    """Joint tree with fixed offsets (meters) and part labels.

    ``joints[0]`` is the root body; every other joint has ``parent`` smaller
    than its own index.  Pose-level arrays (rotations, positions, masks)
    cover the non-root joints only, in ``joints[1:]`` order.
    """

    name: str
    joints: tuple[Joint, ...]
    part_labels: dict[str, str] = field(hash=False)

    def __post_init__(self):
        if not self.joints or self.joints[0].parent != -1:
            raise SchemaError("joints[0] must be the root (parent -1)")
        for i, j in enumerate(self.joints[1:], start=1):
            if not (0 <= j.parent < i):
                raise SchemaError(f"joint {j.name!r} breaks topological order")
        names = [j.name for j in self.joints]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate joint names")
        for j in self.joints:
            label = self.part_labels.get(j.name)
            if label not in PART_LABELS:
                raise SchemaError(f"joint {j.name!r} missing a valid part label")

    @property
    def joint_count(self) -> int:
        """Number of non-root joints (the J of pose-level arrays)."""
        return len(self.joints) - 1

    @cached_property
    def joint_names(self) -> tuple[str, ...]:
        return tuple(j.name for j in self.joints[1:])

    @cached_property
    def parents(self) -> np.ndarray:
        """(J,) parents in non-root indexing; -1 means the root body."""
        return np.array([j.parent - 1 for j in self.joints[1:]], dtype=np.int32)

    @cached_property
    def offsets(self) -> np.ndarray:
        """(J, 3) fixed translations from the parent joint."""
        return np.array([j.offset for j in self.joints[1:]], dtype=np.float64)

    def part_set(self, label: str) -> np.ndarray:
        """Non-root joint indices carrying ``label``."""
        return np.array(
            [i for i, n in enumerate(self.joint_names) if self.part_labels[n] == label],
            dtype=np.int32,
        )

    @cached_property
    def part_sets(self) -> tuple[np.ndarray, ...]:
        """The five part sets: upper right, upper left, root group, lower, full."""
        return (
            self.part_set(UPPER_RIGHT),
            self.part_set(UPPER_LEFT),
            self.part_set(ROOT_GROUP),
            self.part_set(LOWER),
            np.arange(self.joint_count, dtype=np.int32),
        )

    @cached_property
    def upper_joints(self) -> np.ndarray:
        """Arms plus torso/head: everything that is not a leg."""
        return np.array(
            [i for i, n in enumerate(self.joint_names) if self.part_labels[n] != LOWER],
            dtype=np.int32,
        )

    @cached_property
    def lower_joints(self) -> np.ndarray:
        return self.part_set(LOWER)

    @cached_property
    def foot_joints(self) -> np.ndarray:
        """Leaf joints of the lower body (contact points of the root model)."""
        has_child = {j.parent for j in self.joints[1:]}
        return np.array(
            [i for i in self.lower_joints if (i + 1) not in has_child], dtype=np.int32
        )

    @cached_property
    def hip_joints(self) -> np.ndarray:
        """Lower-body joints attached directly to the root, one per foot.

        Ordered to match foot_joints: hip_joints[k] is the chain ancestor of
        foot_joints[k].
        """
        hips = []
        for f in self.foot_joints:
            i = int(f)
            while self.parents[i] >= 0:
                i = int(self.parents[i])
            hips.append(i)
        return np.array(hips, dtype=np.int32)

    @cached_property
    def leg_length(self) -> float:
        """Rest-pose hip-to-foot chain length of the first leg."""
        total = 0.0
        i = int(self.foot_joints[0])
        while True:
            total += float(np.linalg.norm(self.offsets[i]))
            p = int(self.parents[i])
            if p < 0:
                break
            i = p
        return total

    def to_json_dict(self) -> dict:
        return {
            "schema": SKEL_SCHEMA,
            "name": self.name,
            "joints": [
                {"name": j.name, "parent": None if j.parent < 0 else j.parent, "offset": list(j.offset)}
                for j in self.joints
            ],
            "part_labels": dict(self.part_labels),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SkeletonSpec":
        if doc.get("schema") != SKEL_SCHEMA:
            raise SchemaError(f"expected schema {SKEL_SCHEMA!r}, got {doc.get('schema')!r}")
        try:
            joints = tuple(
                Joint(
                    name=j["name"],
                    parent=-1 if j["parent"] is None else int(j["parent"]),
                    offset=tuple(float(x) for x in j["offset"]),
                )
                for j in doc["joints"]
            )
            return cls(name=doc["name"], joints=joints, part_labels=dict(doc["part_labels"]))
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"malformed skeleton document: {e}") from e

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "SkeletonSpec":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def sim13_skeleton() -> SkeletonSpec:
    """Default desk-scale character: pelvis root plus 14 joints, ~1.6 m tall.

    Axes: +x forward, +y left, +z up.  Arms hang down at rest; the pelvis
    rests 0.90 m above the feet.
    """
    j = [
        Joint("root", -1, (0.0, 0.0, 0.0)),
        Joint("torso", 0, (0.0, 0.0, 0.35)),
        Joint("head", 1, (0.0, 0.0, 0.35)),
        Joint("right_shoulder", 1, (0.0, -0.20, 0.25)),
        Joint("right_elbow", 3, (0.0, 0.0, -0.28)),
        Joint("right_hand", 4, (0.0, 0.0, -0.26)),
        Joint("left_shoulder", 1, (0.0, 0.20, 0.25)),
        Joint("left_elbow", 6, (0.0, 0.0, -0.28)),
        Joint("left_hand", 7, (0.0, 0.0, -0.26)),
        Joint("right_hip", 0, (0.0, -0.10, -0.06)),
        Joint("right_knee", 9, (0.0, 0.0, -0.42)),
        Joint("right_foot", 10, (0.0, 0.0, -0.42)),
        Joint("left_hip", 0, (0.0, 0.10, -0.06)),
        Joint("left_knee", 12, (0.0, 0.0, -0.42)),
        Joint("left_foot", 13, (0.0, 0.0, -0.42)),
    ]
    labels = {
        "root": ROOT_GROUP,
        "torso": ROOT_GROUP,
        "head": ROOT_GROUP,
        "right_shoulder": UPPER_RIGHT,
        "right_elbow": UPPER_RIGHT,
        "right_hand": UPPER_RIGHT,
        "left_shoulder": UPPER_LEFT,
        "left_elbow": UPPER_LEFT,
        "left_hand": UPPER_LEFT,
        "right_hip": LOWER,
        "right_knee": LOWER,
        "right_foot": LOWER,
        "left_hip": LOWER,
        "left_knee": LOWER,
        "left_foot": LOWER,
    }
    return SkeletonSpec(name="sim13", joints=tuple(j), part_labels=labels)
