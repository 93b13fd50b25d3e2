from .clip import MotionClip
from .pose import Pose, forward_kinematics, rest_pose
from .skeleton import SkeletonSpec, sim13_skeleton
from .transforms import apply_inplane_rotation, rotate_pose

__all__ = [
    "MotionClip",
    "Pose",
    "forward_kinematics",
    "rest_pose",
    "SkeletonSpec",
    "sim13_skeleton",
    "apply_inplane_rotation",
    "rotate_pose",
]
