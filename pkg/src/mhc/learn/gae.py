"""Generalized advantage estimation."""

from __future__ import annotations

import numpy as np


def gae_advantages(rewards, values, dones, gamma: float, lam: float):
    """Standard GAE recursion.

    rewards, dones: (T,); values: (T + 1,) with the bootstrap value
    appended (use 0 after terminal steps).  Returns (advantages, returns)
    with returns = advantages + values[:-1].
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    t = rewards.shape[0]
    if values.shape[0] != t + 1 or dones.shape[0] != t:
        raise ValueError("gae_advantages: length mismatch")
    adv = np.zeros(t)
    carry = 0.0
    for i in range(t - 1, -1, -1):
        not_done = 0.0 if dones[i] else 1.0
        delta = rewards[i] + gamma * values[i + 1] * not_done - values[i]
        carry = delta + gamma * lam * not_done * carry
        adv[i] = carry
    return adv, adv + values[:-1]
