from .augment import AugmentSpec, build_mplus, combine_upper_lower
from .dataset import MotionDataset
from .fallbank import generate_fall_bank, sample_initial_pose
from .synthetic import CLIP_NAMES, make_clip, make_clips

__all__ = [
    "AugmentSpec",
    "build_mplus",
    "combine_upper_lower",
    "MotionDataset",
    "generate_fall_bank",
    "sample_initial_pose",
    "CLIP_NAMES",
    "make_clip",
    "make_clips",
]
