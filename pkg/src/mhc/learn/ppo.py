"""Clipped-surrogate policy optimization with a fixed entropy bonus."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteLoss
from .nets import Adam, clip_grad_norm
from .policy import GaussianPolicy, ValueNet


@dataclass(frozen=True)
class PpoConfig:
    clip_ratio: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    entropy_coeff: float = 0.005
    policy_lr: float = 3e-4
    value_lr: float = 1e-3
    epochs: int = 4
    minibatches: int = 4
    max_grad_norm: float = 0.5
    target_kl: float = 0.05  # early-stop threshold on the approximate KL

    def __post_init__(self):
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip_ratio must lie in (0, 1)")
        if not (0.0 < self.gamma <= 1.0 and 0.0 < self.gae_lambda <= 1.0):
            raise ValueError("gamma and lambda must lie in (0, 1]")


@dataclass
class RolloutBuffer:
    """Flat on-policy batch; rewards carry their full breakdown for audits."""

    obs: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    breakdowns: list = field(default_factory=list)

    def add(self, obs, action, log_prob, reward, value, done, breakdown=None):
        self.obs.append(obs)
        self.actions.append(action)
        self.log_probs.append(log_prob)
        self.rewards.append(reward)
        self.values.append(value)
        self.dones.append(done)
        self.breakdowns.append(breakdown)

    def __len__(self):
        return len(self.obs)


def ppo_update(
    policy: GaussianPolicy,
    value_net: ValueNet,
    policy_opt: Adam,
    value_opt: Adam,
    obs: np.ndarray,
    actions: np.ndarray,
    log_probs_old: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    cfg: PpoConfig,
    rng: np.random.Generator,
) -> dict:
    """Several epochs of minibatched clipped-surrogate updates (in place).

    Advantages are normalized over the whole batch.  Returns mean KL, clip
    fraction and the last losses; raises NonFiniteLoss on NaN/inf.
    """
    n = obs.shape[0]
    adv = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
    kl_sum = 0.0
    clip_sum = 0.0
    batches = 0
    pi_loss = v_loss = 0.0
    stop_early = False
    for _ in range(cfg.epochs):
        if stop_early:
            break
        perm = rng.permutation(n)
        for chunk in np.array_split(perm, cfg.minibatches):
            if chunk.size == 0:
                continue
            o = obs[chunk]
            a = actions[chunk]
            lp_old = log_probs_old[chunk]
            ad = adv[chunk]
            ret = returns[chunk]
            m = chunk.size

            mean, caches = policy.mean(o)
            log_std = policy.params["log_std"]
            std = np.exp(log_std)
            z = (a - mean) / std
            lp = -0.5 * np.sum(z * z, axis=1) - np.sum(log_std) - 0.5 * policy.action_dim * np.log(2 * np.pi)
            ratio = np.exp(lp - lp_old)
            clipped = np.clip(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio)
            surrogate = np.minimum(ratio * ad, clipped * ad)
            entropy = policy.entropy()
            loss_pi = -float(np.mean(surrogate)) - cfg.entropy_coeff * entropy
            if not np.isfinite(loss_pi):
                raise NonFiniteLoss("policy loss is not finite")

            # gradient flows through the unclipped ratio only where it is active
            active = np.where(
                ad >= 0.0, ratio <= 1.0 + cfg.clip_ratio, ratio >= 1.0 - cfg.clip_ratio
            ).astype(np.float64)
            dlp = -(ad * ratio * active) / m  # d loss / d log_prob
            grad_mean = dlp[:, None] * (z / std)  # d lp / d mean = z / std
            grads = policy.mean_backward(caches, grad_mean)
            g_log_std = np.sum(dlp[:, None] * (z * z - 1.0), axis=0)
            g_log_std -= cfg.entropy_coeff  # d entropy / d log_std = 1
            flat = {f"enc.{k}": v for k, v in grads["enc"].items()}
            flat.update({f"head.{k}": v for k, v in grads["head"].items()})
            flat["log_std"] = g_log_std
            clip_grad_norm(flat, cfg.max_grad_norm)
            policy_opt.step(flat_policy_params(policy), flat)

            v, cache = value_net.value(o)
            loss_v = 0.5 * float(np.mean((v - ret) ** 2))
            if not np.isfinite(loss_v):
                raise NonFiniteLoss("value loss is not finite")
            v_grads = value_net.backward(cache, (v - ret) / m)
            clip_grad_norm(v_grads, cfg.max_grad_norm)
            value_opt.step(value_net.params, v_grads)

            kl = float(np.mean(lp_old - lp))
            kl_sum += kl
            clip_sum += float(np.mean((np.abs(ratio - 1.0) > cfg.clip_ratio).astype(np.float64)))
            batches += 1
            pi_loss, v_loss = loss_pi, loss_v
            if cfg.target_kl > 0 and kl > 1.5 * cfg.target_kl:
                stop_early = True
                break
    return {
        "kl": kl_sum / max(batches, 1),
        "clip_fraction": clip_sum / max(batches, 1),
        "policy_loss": pi_loss,
        "value_loss": v_loss,
    }


def flat_policy_params(policy: GaussianPolicy) -> dict:
    """Flat-key dict view over the policy's nested parameter arrays.

    The arrays are shared (not copied), so Adam's in-place updates reach
    the policy directly; build optimizers over this same view.
    """
    flat = {}
    for k, v in policy.params["enc"].items():
        flat[f"enc.{k}"] = v
    for k, v in policy.params["head"].items():
        flat[f"head.{k}"] = v
    flat["log_std"] = policy.params["log_std"]
    return flat
