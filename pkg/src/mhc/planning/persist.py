"""On-disk forms for logged transitions and compiled MDPs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import checkpoint as ckpt
from ..errors import SchemaError
from .dacmdp import DacMdp, Transition, _compile_tables

TRANSITIONS_SCHEMA = "mhc-transitions/1"


def save_transitions(path, transitions: list, meta: dict | None = None) -> None:
    doc = {
        "schema": TRANSITIONS_SCHEMA,
        "meta": meta or {},
        "transitions": [
            {
                "s": t.state.tolist(),
                "a": int(t.action),
                "r": float(t.reward),
                "sn": t.next_state.tolist(),
                "terminal": bool(t.terminal),
            }
            for t in transitions
        ],
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_transitions(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != TRANSITIONS_SCHEMA:
        raise SchemaError(f"expected {TRANSITIONS_SCHEMA!r}, got {doc.get('schema')!r}")
    transitions = [
        Transition(
            state=np.array(t["s"], dtype=np.float64),
            action=int(t["a"]),
            reward=float(t["r"]),
            next_state=np.array(t["sn"], dtype=np.float64),
            terminal=bool(t.get("terminal", False)),
        )
        for t in doc["transitions"]
    ]
    return transitions, doc.get("meta", {})


def save_mdp(path, mdp: DacMdp, meta: dict | None = None) -> None:
    arrays = {
        "states": mdp.states,
        "actions": mdp.actions.astype(np.float64),
        "rewards": mdp.rewards,
        "next_states": mdp.next_states,
        "terminal": mdp.terminal.astype(np.float64),
    }
    if mdp.values is not None:
        arrays["values"] = mdp.values
    full_meta = {
        "k": mdp.k,
        "smoothing_cost": mdp.smoothing_cost,
        "gamma": mdp.gamma,
        "solved": mdp.values is not None,
        **(meta or {}),
    }
    ckpt.save_arrays(path, arrays, full_meta)


def load_mdp(path) -> tuple[DacMdp, dict]:
    arrays, meta = ckpt.load_arrays(path)
    actions = arrays["actions"].astype(np.int64)
    action_ids = np.unique(actions)
    mdp = DacMdp(
        states=arrays["states"],
        actions=actions,
        rewards=arrays["rewards"],
        next_states=arrays["next_states"],
        terminal=arrays["terminal"].astype(bool),
        k=int(meta["k"]),
        smoothing_cost=float(meta["smoothing_cost"]),
        gamma=float(meta["gamma"]),
        action_ids=action_ids,
        by_action={int(a): np.nonzero(actions == a)[0] for a in action_ids},
    )
    _compile_tables(mdp)
    if "values" in arrays:
        mdp.values = arrays["values"]
    return mdp, meta
