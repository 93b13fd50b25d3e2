"""Motion dataset container and directory I/O.

A dataset directory holds one ``skeleton.json`` (mhc-skel/1) plus one JSON
clip file (mhc-clip/1) per motion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DatasetTooSmall, SchemaError
from ..motion.clip import MotionClip
from ..motion.pose import Pose
from ..motion.skeleton import SkeletonSpec

SKELETON_FILENAME = "skeleton.json"


@dataclass
class MotionDataset:
    clips: list[MotionClip]
    skeleton: SkeletonSpec
    index: np.ndarray = field(init=False)  # (N, 2) int32: (clip id, frame id)

    def __post_init__(self):
        if not self.clips:
            raise DatasetTooSmall("dataset has no clips")
        for c in self.clips:
            if c.skeleton.name != self.skeleton.name:
                raise SchemaError(f"clip {c.name!r} uses skeleton {c.skeleton.name!r}")
        pairs = [
            (ci, fi) for ci, clip in enumerate(self.clips) for fi in range(len(clip))
        ]
        self.index = np.array(pairs, dtype=np.int32)

    def __len__(self) -> int:
        return len(self.clips)

    @property
    def frame_count(self) -> int:
        return self.index.shape[0]

    def sample_frame(self, rng: np.random.Generator) -> Pose:
        """Uniform pose over every frame of every clip."""
        ci, fi = self.index[rng.integers(self.frame_count)]
        return self.clips[ci].frame(int(fi))

    def clip_by_name(self, name: str) -> MotionClip:
        for c in self.clips:
            if c.name == name:
                return c
        raise KeyError(name)

    def raw_clips(self) -> list[MotionClip]:
        """Clips that came from the source data (no combination artifacts)."""
        return [c for c in self.clips if c.source != "combined"]

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.skeleton.save(directory / SKELETON_FILENAME)
        for i, clip in enumerate(self.clips):
            clip.save(directory / f"{i:03d}_{clip.name.replace('/', '_')}.json")

    @classmethod
    def load(cls, directory) -> "MotionDataset":
        directory = Path(directory)
        skel_path = directory / SKELETON_FILENAME
        if not skel_path.exists():
            raise SchemaError(f"missing {SKELETON_FILENAME} in {directory}")
        skeleton = SkeletonSpec.load(skel_path)
        clips = []
        for path in sorted(directory.glob("*.json")):
            if path.name == SKELETON_FILENAME:
                continue
            clips.append(MotionClip.load(path, skeleton))
        return cls(clips=clips, skeleton=skeleton)
