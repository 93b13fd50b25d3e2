"""Transition collection by executing random directive sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.dataset import MotionDataset
from ..motion import rotations as rot
from ..simcore.config import SimConfig
from ..simcore.engine import BatchSim
from .actions import DirectiveAction, action_directive
from .dacmdp import Transition
from .tasks import abstract_state, task_reward

HOLD_RANGE = (30, 90)  # control steps: 1 to 3 s


class ScriptedRootActor:
    """Kinematic joystick follower used for fast data collection.

    Tracks commanded velocity/facing/height with first-order lags; no
    articulated dynamics.  Clip actions hold the character in place.  The
    arena wall keeps trajectories inside a disk around the origin.
    """

    def __init__(self, start_xy, start_yaw: float, dt: float = 1.0 / 30.0, arena_radius: float = np.inf):
        self.pos = np.array([start_xy[0], start_xy[1]], dtype=np.float64)
        self.vel = np.zeros(2)
        self.yaw = float(start_yaw)
        self.height = 0.85
        self.dt = dt
        self.arena_radius = arena_radius
        self.vel_rate = 3.0  # 1/s
        self.yaw_rate = 4.0  # rad/s
        self.height_rate = 3.0

    def step(self, action: DirectiveAction) -> None:
        if action.kind == "joystick":
            cmd = action.speed * np.array([np.cos(action.heading), np.sin(action.heading)])
            facing = action.facing
            height = action.height
        else:
            cmd = np.zeros(2)
            facing = self.yaw
            height = 0.85
        blend = min(1.0, self.vel_rate * self.dt)
        self.vel += (cmd - self.vel) * blend
        self.pos += self.vel * self.dt
        dist = float(np.linalg.norm(self.pos))
        if dist > self.arena_radius:
            self.pos *= self.arena_radius / dist
        dyaw = rot.wrap_angle(facing - self.yaw)
        limit = self.yaw_rate * self.dt
        self.yaw = rot.wrap_angle(self.yaw + np.clip(dyaw, -limit, limit))
        self.height += (height - self.height) * min(1.0, self.height_rate * self.dt)

    def abstract(self, goal) -> np.ndarray:
        return np.array(
            [
                goal[0] - self.pos[0],
                goal[1] - self.pos[1],
                self.vel[0],
                self.vel[1],
                self.yaw,
                self.height,
            ]
        )


@dataclass(frozen=True)
class CollectParams:
    episodes: int = 10
    steps_per_episode: int = 600
    start_radius: float = 6.0
    arena_radius: float = 8.0
    goal: tuple = (0.0, 0.0)
    hold_range: tuple = HOLD_RANGE


def collect_transitions_scripted(
    actions: list[DirectiveAction],
    task,
    params: CollectParams,
    seed: int,
) -> list[Transition]:
    """Fast scripted-rollout collection of (s, a, r, s') at action switches."""
    if not actions:
        raise ValueError("empty action set")
    rng = np.random.default_rng(seed)
    out: list[Transition] = []
    for _ in range(params.episodes):
        r = params.start_radius * np.sqrt(rng.uniform())
        phi = rng.uniform(0, 2 * np.pi)
        actor = ScriptedRootActor(
            (params.goal[0] + r * np.cos(phi), params.goal[1] + r * np.sin(phi)),
            rng.uniform(-np.pi, np.pi),
            arena_radius=params.arena_radius,
        )
        t = 0
        state = actor.abstract(params.goal)
        while t < params.steps_per_episode:
            action = actions[int(rng.integers(len(actions)))]
            hold = int(rng.integers(params.hold_range[0], params.hold_range[1] + 1))
            hold = min(hold, params.steps_per_episode - t)
            acc = 0.0
            for _ in range(hold):
                actor.step(action)
                acc += task_reward(task, actor.abstract(params.goal))
            next_state = actor.abstract(params.goal)
            out.append(
                Transition(
                    state=state,
                    action=action.id,
                    reward=acc / hold,
                    next_state=next_state,
                    terminal=False,
                )
            )
            state = next_state
            t += hold
    return out


def collect_transitions_sim(
    controller,
    dataset: MotionDataset,
    actions: list[DirectiveAction],
    task,
    params: CollectParams,
    seed: int,
    sim_cfg: SimConfig = SimConfig(),
) -> list[Transition]:
    """Collection through the full simulator driven by a trained controller."""
    from ..motion.pose import rest_pose

    rng = np.random.default_rng(seed)
    skel = dataset.skeleton
    out: list[Transition] = []
    for _ in range(params.episodes):
        sim = BatchSim(skel, sim_cfg, 1)
        r = params.start_radius * np.sqrt(rng.uniform())
        phi = rng.uniform(0, 2 * np.pi)
        pose = rest_pose(skel, yaw=rng.uniform(-np.pi, np.pi))
        start = np.array([params.goal[0] + r * np.cos(phi), params.goal[1] + r * np.sin(phi), pose.height])
        from ..motion.pose import Pose

        pose = Pose(
            root_pos=start,
            root_rot6d=pose.root_rot6d,
            lin_vel=pose.lin_vel,
            ang_vel=pose.ang_vel,
            joint_rot6d=pose.joint_rot6d,
            joint_local=pose.joint_local,
            joint_global=pose.joint_global + (start - pose.root_pos),
        )
        sim.reset_env(0, pose)
        t = 0
        state = abstract_state(sim.poses()[0], params.goal)
        while t < params.steps_per_episode:
            action = actions[int(rng.integers(len(actions)))]
            directive = action_directive(action, dataset)
            hold = int(rng.integers(params.hold_range[0], params.hold_range[1] + 1))
            hold = min(hold, params.steps_per_episode - t)
            acc = 0.0
            for step_i in range(hold):
                cur = sim.poses()[0]
                setpoints = controller.act(cur, directive, step_i)
                sim.step(setpoints[None])
                acc += task_reward(task, abstract_state(sim.poses()[0], params.goal))
            next_state = abstract_state(sim.poses()[0], params.goal)
            out.append(
                Transition(state=state, action=action.id, reward=acc / hold, next_state=next_state)
            )
            state = next_state
            t += hold
    return out
