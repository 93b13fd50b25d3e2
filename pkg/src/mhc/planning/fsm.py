"""Hand-authored finite state machines emitting directives.

FSM files use schema "mhc-fsm/1".  Each state carries a directive emission
(a joystick template, possibly parametric on the goal direction, or a clip
reference) and an ordered list of transitions guarded by total predicates
over the abstract state and runtime flags.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import SchemaError

FSM_SCHEMA = "mhc-fsm/1"

PREDICATE_KINDS = ("always", "dist_goal_lt", "dist_goal_gt", "timer_gt", "fallen", "upright")


@dataclass(frozen=True)
class FsmTransition:
    kind: str
    target: str
    value: float = 0.0


@dataclass(frozen=True)
class FsmState:
    name: str
    emission: dict  # {"type": "joystick", ...} or {"type": "clip", "name": ...}
    transitions: tuple = ()


@dataclass(frozen=True)
class FsmSpec:
    name: str
    start: str
    states: dict

    def __post_init__(self):
        if self.start not in self.states:
            raise SchemaError(f"start state {self.start!r} undefined")
        for st in self.states.values():
            for tr in st.transitions:
                if tr.target not in self.states:
                    raise SchemaError(f"transition to undefined state {tr.target!r}")
                if tr.kind not in PREDICATE_KINDS:
                    raise SchemaError(f"unknown predicate {tr.kind!r}")

    def to_json_dict(self) -> dict:
        return {
            "schema": FSM_SCHEMA,
            "name": self.name,
            "start": self.start,
            "states": [
                {
                    "name": st.name,
                    "emission": st.emission,
                    "transitions": [
                        {"kind": tr.kind, "target": tr.target, "value": tr.value}
                        for tr in st.transitions
                    ],
                }
                for st in self.states.values()
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "FsmSpec":
        if doc.get("schema") != FSM_SCHEMA:
            raise SchemaError(f"expected schema {FSM_SCHEMA!r}, got {doc.get('schema')!r}")
        try:
            states = {}
            for st in doc["states"]:
                states[st["name"]] = FsmState(
                    name=st["name"],
                    emission=dict(st["emission"]),
                    transitions=tuple(
                        FsmTransition(kind=tr["kind"], target=tr["target"], value=float(tr.get("value", 0.0)))
                        for tr in st.get("transitions", [])
                    ),
                )
            return cls(name=doc.get("name", "fsm"), start=doc["start"], states=states)
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"malformed fsm: {e}") from e

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "FsmSpec":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass
class FsmRuntime:
    state: str
    steps_in_state: int = 0

    def time_in_state(self, control_hz: float = 30.0) -> float:
        return self.steps_in_state / control_hz


def _predicate(tr: FsmTransition, ctx: dict) -> bool:
    if tr.kind == "always":
        return True
    if tr.kind == "dist_goal_lt":
        return ctx.get("goal_dist", np.inf) < tr.value
    if tr.kind == "dist_goal_gt":
        return ctx.get("goal_dist", np.inf) > tr.value
    if tr.kind == "timer_gt":
        return ctx.get("time_in_state", 0.0) > tr.value
    if tr.kind == "fallen":
        return bool(ctx.get("fallen", False))
    if tr.kind == "upright":
        return not ctx.get("fallen", False)
    raise SchemaError(f"unknown predicate {tr.kind!r}")


def resolve_emission(emission: dict, ctx: dict) -> dict:
    """Make a parametric emission concrete (heading 'toward_goal' etc.)."""
    out = dict(emission)
    if out.get("type") == "joystick":
        for key in ("heading", "facing"):
            if out.get(key) == "toward_goal":
                out[key] = float(ctx.get("goal_heading", 0.0))
            elif out.get(key) == "away_from_goal":
                out[key] = float(np.mod(ctx.get("goal_heading", 0.0) + 2 * np.pi, 2 * np.pi) - np.pi)
    return out


def fsm_step(fsm: FsmSpec, runtime: FsmRuntime, ctx: dict):
    """Advance one tick: first satisfied predicate (declared order) moves to
    its target; the (possibly new) state's directive emission is returned."""
    state = fsm.states[runtime.state]
    ctx = dict(ctx)
    ctx.setdefault("time_in_state", runtime.time_in_state())
    next_runtime = replace(runtime, steps_in_state=runtime.steps_in_state + 1)
    for tr in state.transitions:
        if _predicate(tr, ctx):
            next_runtime = FsmRuntime(state=tr.target, steps_in_state=0)
            break
    emission = resolve_emission(fsm.states[next_runtime.state].emission, ctx)
    return emission, next_runtime


def goto_fsm(run_speed: float = 2.5, finish_clip: str = "wave", stop_dist: float = 0.5) -> FsmSpec:
    """Run toward the goal, emit the finishing clip on arrival."""
    states = {
        "approach": FsmState(
            name="approach",
            emission={
                "type": "joystick",
                "speed": run_speed,
                "heading": "toward_goal",
                "facing": "toward_goal",
                "height": 0.85,
            },
            transitions=(FsmTransition(kind="dist_goal_lt", target="finish", value=stop_dist),),
        ),
        "finish": FsmState(
            name="finish",
            emission={"type": "clip", "name": finish_clip},
            transitions=(FsmTransition(kind="dist_goal_gt", target="approach", value=1.5),),
        ),
    }
    return FsmSpec(name="goto", start="approach", states=states)
