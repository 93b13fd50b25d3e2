"""Task rewards and the abstract-state extraction for planning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..motion import rotations as rot
from ..motion.pose import Pose


@dataclass(frozen=True)
class GotoTask:
    goal: tuple[float, float]

    def reward(self, state: np.ndarray) -> float:
        return task_reward_goto(state)


@dataclass(frozen=True)
class HeadingTask:
    move_dir: float  # rad, target velocity direction
    speed: float
    facing: float
    height: float


# Abstract state layout (goto family):
#   [goal-relative x, goal-relative y, vx, vy, heading, height]
ABSTRACT_DIM = 6


def abstract_state(pose: Pose, goal) -> np.ndarray:
    heading = rot.yaw_of_matrix(pose.root_matrix())
    return np.array(
        [
            goal[0] - pose.root_pos[0],
            goal[1] - pose.root_pos[1],
            pose.lin_vel[0],
            pose.lin_vel[1],
            rot.wrap_angle(float(heading)),
            pose.height,
        ]
    )


def goal_distance(state: np.ndarray) -> float:
    return float(np.hypot(state[0], state[1]))


def task_reward_goto(state: np.ndarray) -> float:
    """exp(-distance/2): equals 1 exactly at the goal."""
    return float(np.exp(-0.5 * goal_distance(state)))


def task_reward_heading(state: np.ndarray, task: HeadingTask) -> float:
    """Velocity-direction matching plus facing and height terms."""
    target_v = task.speed * np.array([np.cos(task.move_dir), np.sin(task.move_dir)])
    v_err = float(np.linalg.norm(state[2:4] - target_v))
    f_err = abs(rot.wrap_angle(state[4] - task.facing))
    h_err = abs(state[5] - task.height)
    return float(
        0.6 * np.exp(-2.0 * v_err) + 0.2 * np.exp(-2.0 * f_err) + 0.2 * np.exp(-8.0 * h_err)
    )


def task_reward(task, state: np.ndarray) -> float:
    if isinstance(task, GotoTask):
        return task_reward_goto(state)
    if isinstance(task, HeadingTask):
        return task_reward_heading(state, task)
    raise TypeError(f"unknown task {type(task).__name__}")
