"""Data-driven MDP compiled from logged transitions.

Queries average the k nearest logged transitions of the chosen action with
inverse-distance weights; rewards carry a distance penalty C so the value
function distrusts regions far from data.  Value iteration runs over the
dataset's next-states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientData, NoConvergence

DIST_EPS = 1e-6


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool = False


@dataclass
class DacMdp:
    states: np.ndarray  # (N, d) query anchors s_i
    actions: np.ndarray  # (N,) int
    rewards: np.ndarray  # (N,)
    next_states: np.ndarray  # (N, d): the value-support states
    terminal: np.ndarray  # (N,) bool
    k: int
    smoothing_cost: float
    gamma: float
    action_ids: np.ndarray  # sorted unique action ids
    by_action: dict  # action id -> transition indices
    # compiled backup tables over the value support
    nbr_idx: np.ndarray = field(default=None)  # (N, A, k) transition indices
    nbr_w: np.ndarray = field(default=None)  # (N, A, k)
    r_table: np.ndarray = field(default=None)  # (N, A)
    values: np.ndarray = field(default=None)  # (N,) after solving
    residuals: list = field(default_factory=list)

    @property
    def n_states(self) -> int:
        return self.next_states.shape[0]

    def query(self, state: np.ndarray, action: int):
        """kNN model at (state, action): (weights, transition indices, R)."""
        idx = self.by_action.get(int(action))
        if idx is None or len(idx) < self.k:
            raise InsufficientData(f"action {action} has fewer than k={self.k} transitions")
        d = np.linalg.norm(self.states[idx] - state, axis=1)
        order = np.argpartition(d, self.k - 1)[: self.k]
        sel = idx[order]
        dist = d[order]
        w = 1.0 / (dist + DIST_EPS)
        w = w / np.sum(w)
        r = float(np.sum(w * (self.rewards[sel] - self.smoothing_cost * dist)))
        return w, sel, r

    def q_value(self, state: np.ndarray, action: int, values: np.ndarray) -> float:
        w, sel, r = self.query(state, action)
        cont = np.where(self.terminal[sel], 0.0, values[sel])
        return r + self.gamma * float(np.sum(w * cont))


def build_dac_mdp(
    transitions: list,
    k: int = 5,
    smoothing_cost: float = 1.0,
    gamma: float = 0.99,
    reward_fn=None,
) -> DacMdp:
    """Compile transitions into a finite MDP with kNN-averaged dynamics.

    reward_fn(state, action, next_state), when given, replaces the logged
    rewards (e.g. to negate a task without recollecting data).
    """
    if not transitions:
        raise InsufficientData("no transitions")
    states = np.stack([t.state for t in transitions])
    actions = np.array([t.action for t in transitions], dtype=np.int64)
    next_states = np.stack([t.next_state for t in transitions])
    terminal = np.array([t.terminal for t in transitions], dtype=bool)
    if reward_fn is not None:
        rewards = np.array(
            [reward_fn(t.state, t.action, t.next_state) for t in transitions]
        )
    else:
        rewards = np.array([t.reward for t in transitions], dtype=np.float64)

    action_ids = np.unique(actions)
    by_action = {int(a): np.nonzero(actions == a)[0] for a in action_ids}
    for a, idx in by_action.items():
        if len(idx) < k:
            raise InsufficientData(f"action {a} has {len(idx)} < k={k} transitions")

    mdp = DacMdp(
        states=states,
        actions=actions,
        rewards=rewards,
        next_states=next_states,
        terminal=terminal,
        k=k,
        smoothing_cost=smoothing_cost,
        gamma=gamma,
        action_ids=action_ids,
        by_action=by_action,
    )
    _compile_tables(mdp)
    return mdp


def _compile_tables(mdp: DacMdp) -> None:
    """Precompute the kNN backup tables for every (next-state, action)."""
    n = mdp.n_states
    n_a = len(mdp.action_ids)
    k = mdp.k
    mdp.nbr_idx = np.zeros((n, n_a, k), dtype=np.int64)
    mdp.nbr_w = np.zeros((n, n_a, k))
    mdp.r_table = np.zeros((n, n_a))
    for ai, a in enumerate(mdp.action_ids):
        idx = mdp.by_action[int(a)]
        # (N, |idx|) pairwise distances, small at desk scale
        d = np.linalg.norm(mdp.next_states[:, None, :] - mdp.states[idx][None, :, :], axis=2)
        order = np.argpartition(d, k - 1, axis=1)[:, :k]
        rows = np.arange(n)[:, None]
        dist = d[rows, order]
        sel = idx[order]
        w = 1.0 / (dist + DIST_EPS)
        w = w / np.sum(w, axis=1, keepdims=True)
        mdp.nbr_idx[:, ai] = sel
        mdp.nbr_w[:, ai] = w
        mdp.r_table[:, ai] = np.sum(w * (mdp.rewards[sel] - mdp.smoothing_cost * dist), axis=1)


def value_iteration(mdp: DacMdp, tol: float = 1e-8, max_iters: int = 20_000) -> np.ndarray:
    """Solve the compiled MDP; stores V and the residual history on the mdp."""
    v = np.zeros(mdp.n_states)
    cont_mask = np.where(mdp.terminal, 0.0, 1.0)
    residuals = []
    for _ in range(max_iters):
        cont = cont_mask[mdp.nbr_idx] * v[mdp.nbr_idx]
        q = mdp.r_table + mdp.gamma * np.sum(mdp.nbr_w * cont, axis=2)
        v_new = np.max(q, axis=1)
        resid = float(np.max(np.abs(v_new - v)))
        residuals.append(resid)
        v = v_new
        if resid < tol:
            mdp.values = v
            mdp.residuals = residuals
            return v
    raise NoConvergence(f"value iteration did not reach {tol} in {max_iters} iterations")


def greedy_policy(mdp: DacMdp, values: np.ndarray, state: np.ndarray) -> int:
    """Best action at a query state; ties break toward the lowest action id."""
    best_a = None
    best_q = -np.inf
    for a in mdp.action_ids:
        q = mdp.q_value(state, int(a), values)
        if q > best_q + 1e-15:
            best_q = q
            best_a = int(a)
    if best_a is None:
        raise InsufficientData("no actions available")
    return best_a
