"""Directive actions: the finite action set of the planning layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import directives as dv
from ..motion import rotations as rot

RUN_SPEED = 2.5
RUN_HEIGHT = 0.85
CROUCH_SPEED = 1.0
CROUCH_HEIGHT = 0.4
N_HEADINGS = 8


@dataclass(frozen=True)
class DirectiveAction:
    """One planner action: a joystick template or a finishing clip."""

    id: int
    kind: str  # "joystick" | "clip"
    speed: float = 0.0
    heading: float = 0.0  # velocity direction, world frame
    facing: float = 0.0
    height: float = RUN_HEIGHT
    clip_name: str = ""

    def describe(self) -> str:
        if self.kind == "clip":
            return f"clip:{self.clip_name}"
        return f"joy:v={self.speed:g}@{self.heading:.2f} h={self.height:g}"


def joystick_directive(
    speed: float, heading: float, facing: float, height: float, joint_count: int, frames: int = 30
) -> dv.Directive:
    """Constant root-field directive realizing a joystick command."""
    vel = np.array([speed * np.cos(heading), speed * np.sin(heading), 0.0])
    track = dv.TargetTrack(
        root_pos=np.tile([0.0, 0.0, height], (frames, 1)),
        root_rot6d=np.tile(rot.matrix_to_sixd(rot.rotz(facing)), (frames, 1)),
        lin_vel=np.tile(vel, (frames, 1)),
        ang_vel=np.zeros((frames, 3)),
        joint_rot6d=np.tile(rot.IDENTITY_6D, (frames, joint_count, 1)),
        joint_local=np.zeros((frames, joint_count, 3)),
        joint_global=np.zeros((frames, joint_count, 3)),
    )
    return dv.Directive(track=track, mask=dv.joystick_mask(joint_count))


def action_directive(action: DirectiveAction, dataset, horizon_frames: int = 30) -> dv.Directive:
    """Instantiate an action template against a dataset."""
    if action.kind == "clip":
        clip = dataset.clip_by_name(action.clip_name)
        return dv.Directive.from_clip(clip, dv.full_pose_mask(dataset.skeleton.joint_count))
    return joystick_directive(
        action.speed, action.heading, action.facing, action.height,
        dataset.skeleton.joint_count, frames=horizon_frames,
    )


def default_action_set(finishing_clips=("wave", "arm_raise")) -> list[DirectiveAction]:
    """8 headings x {run, crouch-walk} plus two finishing clips: 18 actions."""
    actions = []
    i = 0
    for style_speed, style_height in ((RUN_SPEED, RUN_HEIGHT), (CROUCH_SPEED, CROUCH_HEIGHT)):
        for k in range(N_HEADINGS):
            heading = 2.0 * np.pi * k / N_HEADINGS
            actions.append(
                DirectiveAction(
                    id=i, kind="joystick", speed=style_speed, heading=heading,
                    facing=heading, height=style_height,
                )
            )
            i += 1
    for name in finishing_clips:
        actions.append(DirectiveAction(id=i, kind="clip", clip_name=name))
        i += 1
    return actions
