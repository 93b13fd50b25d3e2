"""Gaussian control policy and value function.

The policy encodes the directive part of the observation with one MLP,
concatenates the encoding with the current-pose features and maps the
result through a head MLP to the action mean.  The log standard deviation
is a free state-independent parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..directives import ObservationLayout
from .nets import MlpSpec, backward, forward, init_params

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class PolicyConfig:
    enc_hidden: tuple = (256, 128)
    enc_out: int = 64
    head_hidden: tuple = (256, 256)
    value_hidden: tuple = (256, 256)
    init_log_std: float = -1.0


class GaussianPolicy:
    def __init__(self, layout: ObservationLayout, action_dim: int, cfg: PolicyConfig, seed: int = 0):
        self.layout = layout
        self.action_dim = action_dim
        self.cfg = cfg
        self.enc_spec = MlpSpec(layout.directive_dim, tuple(cfg.enc_hidden), cfg.enc_out)
        self.head_spec = MlpSpec(
            layout.current_dim + cfg.enc_out, tuple(cfg.head_hidden), action_dim, head="gaussian"
        )
        rng = np.random.default_rng(seed)
        self.params = {
            "enc": init_params(self.enc_spec, rng),
            "head": init_params(self.head_spec, rng),
            "log_std": np.full(action_dim, cfg.init_log_std),
        }

    # -- forward -----------------------------------------------------------

    def split(self, obs: np.ndarray):
        cur = obs[:, : self.layout.current_dim]
        directive = obs[:, self.layout.current_dim :]
        return cur, directive

    def mean(self, obs: np.ndarray):
        """Action mean plus caches for the backward pass."""
        cur, directive = self.split(obs)
        enc, enc_cache = forward(self.enc_spec, self.params["enc"], directive)
        head_in = np.concatenate([cur, enc], axis=1)
        mean, head_cache = forward(self.head_spec, self.params["head"], head_in)
        return mean, (enc_cache, head_cache)

    def mean_backward(self, caches, grad_mean: np.ndarray):
        """Gradients of a scalar loss through the composite mean network."""
        enc_cache, head_cache = caches
        head_grads, g_head_in = backward(self.head_spec, self.params["head"], head_cache, grad_mean)
        g_enc_out = g_head_in[:, self.layout.current_dim :]
        enc_grads, _ = backward(self.enc_spec, self.params["enc"], enc_cache, g_enc_out)
        return {"enc": enc_grads, "head": head_grads}

    # -- distribution ------------------------------------------------------------

    def std(self) -> np.ndarray:
        return np.exp(self.params["log_std"])

    def sample(self, obs: np.ndarray, rng: np.random.Generator):
        """Stochastic actions plus their log probabilities."""
        mean, _ = self.mean(obs)
        noise = rng.standard_normal(mean.shape)
        actions = mean + noise * self.std()
        return actions, self.log_prob_given_mean(mean, actions)

    def act(self, obs: np.ndarray) -> np.ndarray:
        """Deterministic (mean) actions for evaluation."""
        mean, _ = self.mean(obs)
        return mean

    def log_prob_given_mean(self, mean: np.ndarray, actions: np.ndarray) -> np.ndarray:
        log_std = self.params["log_std"]
        z = (actions - mean) / np.exp(log_std)
        return -0.5 * np.sum(z * z, axis=1) - np.sum(log_std) - 0.5 * self.action_dim * LOG_2PI

    def entropy(self) -> float:
        return float(np.sum(self.params["log_std"]) + 0.5 * self.action_dim * (LOG_2PI + 1.0))


class ValueNet:
    def __init__(self, layout: ObservationLayout, cfg: PolicyConfig, seed: int = 1):
        self.spec = MlpSpec(layout.total_dim, tuple(cfg.value_hidden), 1)
        self.params = init_params(self.spec, np.random.default_rng(seed))

    def value(self, obs: np.ndarray):
        v, cache = forward(self.spec, self.params, obs)
        return v[:, 0], cache

    def backward(self, cache, grad_v: np.ndarray) -> dict:
        grads, _ = backward(self.spec, self.params, cache, grad_v[:, None])
        return grads
