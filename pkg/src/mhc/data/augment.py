"""Dataset augmentation: upper/lower body combinations (the M-plus set)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ClipTooShort, DatasetTooSmall
from ..motion.clip import MotionClip
from ..motion.skeleton import SkeletonSpec
from ..motion.transforms import apply_inplane_rotation
from .dataset import MotionDataset

# Combined clips keep at least this many frames so episode sub-sequences
# (up to 240 frames) can always be drawn from them.
MIN_COMBO_LEN = 240


@dataclass(frozen=True)
class AugmentSpec:
    """Which joints swap sources during combination, and rotation settings."""

    upper_joints: np.ndarray
    lower_joints: np.ndarray
    enable_combinations: bool = True
    rotation_range: tuple[float, float] = (0.0, 2.0 * np.pi)

    @classmethod
    def for_skeleton(cls, skel: SkeletonSpec, **kw) -> "AugmentSpec":
        return cls(upper_joints=skel.upper_joints, lower_joints=skel.lower_joints, **kw)

    def __post_init__(self):
        upper = set(self.upper_joints.tolist())
        lower = set(self.lower_joints.tolist())
        if upper & lower:
            raise ValueError("upper and lower joint sets overlap")


def combine_upper_lower(
    lower_src: MotionClip, upper_src: MotionClip, length: int, spec: AugmentSpec | None = None
) -> MotionClip:
    """Blend two clips: root channel + lower body from one, upper body from
    the other, frame by frame; position channels are recomputed by FK."""
    if len(lower_src) < length or len(upper_src) < length:
        raise ClipTooShort(
            f"need {length} frames, have {len(lower_src)} (lower) / {len(upper_src)} (upper)"
        )
    skel = lower_src.skeleton
    if spec is None:
        spec = AugmentSpec.for_skeleton(skel)
    joint_rot6d = lower_src.joint_rot6d[:length].copy()
    joint_rot6d[:, spec.upper_joints] = upper_src.joint_rot6d[:length, spec.upper_joints]
    return MotionClip.from_channels(
        name=f"{lower_src.name}+{upper_src.name}",
        fps=lower_src.fps,
        skeleton=skel,
        root_pos=lower_src.root_pos[:length],
        root_rot6d=lower_src.root_rot6d[:length],
        lin_vel=lower_src.lin_vel[:length],
        ang_vel=lower_src.ang_vel[:length],
        joint_rot6d=joint_rot6d,
        source="combined",
    )


def build_mplus(
    ds: MotionDataset, spec: AugmentSpec, n_combos: int, seed: int
) -> MotionDataset:
    """Augment the dataset with sampled upper/lower combinations.

    Clip pairs and start offsets are sampled uniformly; each combination
    gets a random in-plane rotation from spec.rotation_range about its first
    root position.  Deterministic for a given seed.
    """
    if not ds.clips:
        raise DatasetTooSmall("cannot augment an empty dataset")
    rng = np.random.default_rng(seed)
    clips = list(ds.clips)
    if spec.enable_combinations:
        for i in range(n_combos):
            li, ui = rng.integers(len(ds.clips), size=2)
            lower, upper = ds.clips[int(li)], ds.clips[int(ui)]
            max_len = min(len(lower), len(upper))
            length = int(rng.integers(min(MIN_COMBO_LEN, max_len), max_len + 1))
            off_l = int(rng.integers(len(lower) - length + 1))
            off_u = int(rng.integers(len(upper) - length + 1))
            combo = combine_upper_lower(
                lower.slice(off_l, off_l + length, name=lower.name),
                upper.slice(off_u, off_u + length, name=upper.name),
                length,
                spec,
            )
            yaw = rng.uniform(*spec.rotation_range)
            combo = apply_inplane_rotation(combo, yaw, combo.root_pos[0, :2])
            combo.name = f"combo{i:03d}_{lower.name}_{upper.name}"
            clips.append(combo)
    return MotionDataset(clips=clips, skeleton=ds.skeleton)
