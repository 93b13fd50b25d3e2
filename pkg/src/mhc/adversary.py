"""Part-wise motion discriminators and the style reward.

Five discriminators score 10-frame motion windows for naturalness, one per
body-part set (upper right, upper left, root group, lower body, full
body).  They share a single trunk network; each part is a wrapper that
masks the input features down to its own joints, so perturbing joints
outside a part can never change that part's score.

Window features are heading-invariant: per frame, each joint contributes
its 6D rotation, root-relative position and root-relative velocity (finite
differences along the motion); the root contributes height, orientation
and velocities expressed in the heading frame of the window's first frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import checkpoint as ckpt
from .learn.nets import (
    Adam,
    MlpSpec,
    backward,
    forward,
    init_params,
    input_gradient,
    r1_param_grads,
)
from .motion import rotations as rot
from .motion.clip import MotionClip
from .motion.pose import Pose
from .motion.skeleton import ROOT_GROUP, SkeletonSpec

WINDOW_LEN = 10
ROOT_FEATS = 13
JOINT_FEATS = 12
CLAMP_EPS = 0.01
PART_NAMES = ("upper_right", "upper_left", "root_group", "lower", "full")


class StyleFeatures:
    """Feature layout and batched window assembly for one skeleton."""

    def __init__(self, skel: SkeletonSpec, fps: float = 30.0):
        self.skel = skel
        self.fps = fps
        self.nj = skel.joint_count
        self.frame_dim = ROOT_FEATS + JOINT_FEATS * self.nj
        self.window_dim = WINDOW_LEN * self.frame_dim
        self.part_masks = self._build_part_masks()

    def _build_part_masks(self) -> np.ndarray:
        frame_masks = np.zeros((5, self.frame_dim))
        sets = self.skel.part_sets
        for k in range(5):
            mask = frame_masks[k]
            if PART_NAMES[k] in ("root_group", "full"):
                mask[:ROOT_FEATS] = 1.0
            for j in sets[k]:
                base = ROOT_FEATS + JOINT_FEATS * int(j)
                mask[base : base + JOINT_FEATS] = 1.0
        return np.tile(frame_masks, (1, WINDOW_LEN))

    # -- per-frame raw records ------------------------------------------------

    def frame_arrays(self, poses: list[Pose], prev_poses: list[Pose] | None):
        """Raw per-frame stream records for a batch of envs.

        Returns (heights (E,), mats (E,3,3), lin (E,3), ang (E,3),
        joint (E, 12*J)); joint velocity features difference against
        prev_poses (zeros at a stream start).
        """
        e = len(poses)
        heights = np.array([p.height for p in poses])
        mats = np.stack([p.root_matrix() for p in poses])
        lin = np.stack([p.lin_vel for p in poses])
        ang = np.stack([p.ang_vel for p in poses])
        joint = np.zeros((e, JOINT_FEATS * self.nj))
        for i, p in enumerate(poses):
            if prev_poses is None or prev_poses[i] is None:
                vel = np.zeros_like(p.joint_local)
            else:
                vel = (p.joint_local - prev_poses[i].joint_local) * self.fps
            joint[i] = np.concatenate([p.joint_rot6d, p.joint_local, vel], axis=1).ravel()
        return heights, mats, lin, ang, joint

    # -- window assembly --------------------------------------------------------

    def build_windows(self, heights, mats, lin, ang, joint) -> np.ndarray:
        """(E, 10, ...) frame records -> (E, window_dim) canonical windows.

        The heading of each window's first frame is removed from all of its
        root features.
        """
        e = heights.shape[0]
        yaw0 = np.arctan2(mats[:, 0, 1, 0], mats[:, 0, 0, 0])
        c, s = np.cos(-yaw0), np.sin(-yaw0)
        rz = np.zeros((e, 3, 3))
        rz[:, 0, 0] = c
        rz[:, 0, 1] = -s
        rz[:, 1, 0] = s
        rz[:, 1, 1] = c
        rz[:, 2, 2] = 1.0
        mats_c = np.einsum("eab,etbc->etac", rz, mats)
        rot6d = np.concatenate([mats_c[..., :, 0], mats_c[..., :, 1]], axis=-1)
        lin_c = np.einsum("eab,etb->eta", rz, lin)
        ang_c = np.einsum("eab,etb->eta", rz, ang)
        frames = np.concatenate(
            [heights[..., None], rot6d, lin_c, ang_c, joint], axis=-1
        )
        return frames.reshape(e, self.window_dim)

    def windows_from_clip(self, clip: MotionClip) -> np.ndarray:
        """All sliding windows of a clip: (T - 9, window_dim)."""
        t = len(clip)
        if t < WINDOW_LEN:
            return np.zeros((0, self.window_dim))
        heights = clip.root_pos[:, 2]
        mats = rot.sixd_to_matrix_unchecked(clip.root_rot6d)
        vel = np.zeros_like(clip.joint_local)
        vel[1:] = (clip.joint_local[1:] - clip.joint_local[:-1]) * self.fps
        joint = np.concatenate([clip.joint_rot6d, clip.joint_local, vel], axis=2).reshape(t, -1)
        n = t - WINDOW_LEN + 1
        idx = np.arange(n)[:, None] + np.arange(WINDOW_LEN)[None, :]
        return self.build_windows(heights[idx], mats[idx], clip.lin_vel[idx], clip.ang_vel[idx], joint[idx])


@dataclass
class DiscriminatorEnsemble:
    """Shared trunk + five masked-input wrappers; outputs in (0, 1)."""

    features: StyleFeatures
    spec: MlpSpec
    params: dict
    clamp_eps: float = CLAMP_EPS

    @classmethod
    def create(cls, features: StyleFeatures, hidden=(256, 128), seed: int = 0) -> "DiscriminatorEnsemble":
        spec = MlpSpec(features.window_dim, tuple(hidden), 1, head="logit")
        params = init_params(spec, np.random.default_rng(seed))
        return cls(features=features, spec=spec, params=params)

    def logits(self, windows: np.ndarray, part: int) -> np.ndarray:
        masked = windows * self.features.part_masks[part]
        out, _ = forward(self.spec, self.params, masked)
        return out[:, 0]

    def probs_all_parts(self, windows: np.ndarray) -> np.ndarray:
        """(N, window_dim) full-feature windows -> (N, 5) clamped outputs."""
        n = windows.shape[0]
        stacked = (windows[None, :, :] * self.features.part_masks[:, None, :]).reshape(
            5 * n, -1
        )
        out, _ = forward(self.spec, self.params, stacked)
        probs = 1.0 / (1.0 + np.exp(-out.reshape(5, n).T))
        return np.clip(probs, self.clamp_eps, 1.0 - self.clamp_eps)

    def save(self, path) -> None:
        meta = {
            "hidden": list(self.spec.hidden),
            "window_dim": self.features.window_dim,
            "clamp_eps": self.clamp_eps,
            "skeleton": self.features.skel.name,
        }
        ckpt.save_arrays(path, self.params, meta)

    @classmethod
    def load(cls, path, features: StyleFeatures) -> "DiscriminatorEnsemble":
        params, meta = ckpt.load_arrays(path)
        spec = MlpSpec(features.window_dim, tuple(meta["hidden"]), 1, head="logit")
        return cls(features=features, spec=spec, params=params, clamp_eps=float(meta["clamp_eps"]))


def style_reward(ensemble: DiscriminatorEnsemble, windows: np.ndarray):
    """Per-part style components and their mean.

    windows: (window_dim,) or (N, window_dim) full-feature windows.
    Components are -log(1 - clamp(D, eps, 1-eps)).
    """
    one = windows.ndim == 1
    if one:
        windows = windows[None]
    probs = ensemble.probs_all_parts(windows)
    parts = -np.log(1.0 - probs)
    r_st = parts.mean(axis=1)
    if one:
        return parts[0], float(r_st[0])
    return parts, r_st


def discriminator_loss(
    ensemble: DiscriminatorEnsemble,
    real: np.ndarray,
    fake: np.ndarray,
    gp_weight: float = 5.0,
    gp_max: int = 64,
):
    """Mean over parts of BCE(real->1, fake->0) plus the R1 penalty on real
    inputs; returns (loss, parameter grads, stats).

    All five part wrappers run as one stacked batch.  The penalty uses the
    first min(gp_max, batch) real samples per part, which keeps the loss a
    deterministic function of its inputs.
    """
    masks = ensemble.features.part_masks
    spec, params = ensemble.spec, ensemble.params
    n_r, n_f = real.shape[0], fake.shape[0]
    xr = (real[None, :, :] * masks[:, None, :]).reshape(5 * n_r, -1)
    xf = (fake[None, :, :] * masks[:, None, :]).reshape(5 * n_f, -1)
    lr_out, cache_r = forward(spec, params, xr)
    lf_out, cache_f = forward(spec, params, xf)
    lr = lr_out[:, 0]
    lf = lf_out[:, 0]
    # sum over parts of per-part means; softplus(-l) real, softplus(l) fake
    loss = float(np.sum(np.logaddexp(0.0, -lr)) / n_r + np.sum(np.logaddexp(0.0, lf)) / n_f)
    g_r = (-1.0 / (1.0 + np.exp(lr)) / n_r)[:, None]
    g_f = (1.0 / (1.0 + np.exp(-lf)) / n_f)[:, None]
    grads_r, _ = backward(spec, params, cache_r, g_r)
    grads_f, _ = backward(spec, params, cache_f, g_f)
    total_grads = {k: grads_r[k] + grads_f[k] for k in grads_r}

    if gp_weight > 0.0:
        gp_n = min(gp_max, n_r)
        xg = (real[None, :gp_n, :] * masks[:, None, :]).reshape(5 * gp_n, -1)
        g, cache, grad_cache = input_gradient(spec, params, xg)
        # sum over parts of per-part means == 5 * mean over the stacked batch
        loss += gp_weight * 5.0 * float(np.mean(np.sum(g * g, axis=1)))
        r1 = r1_param_grads(spec, params, cache, grad_cache)
        for k in total_grads:
            total_grads[k] += gp_weight * 5.0 * r1[k]

    loss /= 5.0
    for k in total_grads:
        total_grads[k] /= 5.0
    stats = {
        "d_real": float(np.mean(1.0 / (1.0 + np.exp(-lr)))),
        "d_fake": float(np.mean(1.0 / (1.0 + np.exp(-lf)))),
    }
    return loss, total_grads, stats


def update_discriminators(
    ensemble: DiscriminatorEnsemble,
    real: np.ndarray,
    fake: np.ndarray,
    optimizer: Adam,
    gp_weight: float = 5.0,
):
    """One gradient step on the ensemble parameters (in place)."""
    loss, grads, stats = discriminator_loss(ensemble, real, fake, gp_weight)
    optimizer.step(ensemble.params, grads)
    stats["loss"] = loss
    return stats


class WindowReplay:
    """FIFO (ring) replay of policy-generated windows."""

    def __init__(self, capacity: int, dim: int):
        self.buf = np.zeros((capacity, dim))
        self.capacity = capacity
        self.write = 0
        self.count = 0

    def push(self, windows: np.ndarray) -> None:
        for w in windows:
            self.buf[self.write] = w
            self.write = (self.write + 1) % self.capacity
            self.count = min(self.count + 1, self.capacity)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        idx = rng.integers(self.count, size=n)
        return self.buf[idx]
