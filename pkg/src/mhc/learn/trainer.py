"""Full training loop over the masked-directive episode distribution."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..adversary import (
    DiscriminatorEnsemble,
    StyleFeatures,
    WindowReplay,
    style_reward,
    update_discriminators,
)
from ..data.augment import AugmentSpec, build_mplus
from ..data.dataset import MotionDataset
from ..data.fallbank import generate_fall_bank, sample_initial_pose
from ..directives import (
    Directive,
    EpisodeSpec,
    ObservationLayout,
    build_episode_directive,
    encode_observation,
)
from ..rewards import RewardBreakdown, TrackingConfig, energy_cost, total_reward, tracking_reward
from ..simcore.config import SimConfig
from ..simcore.engine import BatchSim
from .. import checkpoint as ckpt
from .gae import gae_advantages
from .nets import Adam
from .policy import GaussianPolicy, PolicyConfig, ValueNet
from .ppo import PpoConfig, ppo_update, flat_policy_params

WINDOW_LEN = 10


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    iterations: int = 50
    n_envs: int = 8
    n_combos: int = 6
    p_fall: float = 0.1
    fall_bank_size: int = 12
    episode: EpisodeSpec = EpisodeSpec()
    ppo: PpoConfig = PpoConfig()
    policy: PolicyConfig = PolicyConfig()
    tracking: TrackingConfig = TrackingConfig()
    sim: SimConfig = SimConfig()
    disc_hidden: tuple = (256, 128)
    disc_lr: float = 5e-4
    disc_batch: int = 256
    disc_updates: int = 2
    gp_weight: float = 5.0
    replay_capacity: int = 20_000
    checkpoint_every: int = 50

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TrainConfig":
        doc = dict(doc)
        nested = {
            "episode": EpisodeSpec,
            "ppo": PpoConfig,
            "policy": PolicyConfig,
            "tracking": TrackingConfig,
            "sim": SimConfig,
        }
        kw = {}
        for key, value in doc.items():
            if key in nested:
                value = {
                    k: tuple(v) if isinstance(v, list) else v for k, v in value.items()
                }
                kw[key] = nested[key](**value)
            elif isinstance(value, list):
                kw[key] = tuple(value)
            else:
                kw[key] = value
        return cls(**kw)


METRIC_COLUMNS = (
    "iteration",
    "r_h",
    "r_o",
    "r_v",
    "r_l",
    "r_tr",
    "r_st",
    "energy",
    "total",
    "fall_fraction",
    "d_real",
    "d_fake",
    "disc_loss",
    "kl",
    "clip_fraction",
    "policy_loss",
    "value_loss",
    "log_std",
)


@dataclass
class TrainResult:
    metrics: list
    checkpoint_paths: list
    out_dir: Path


class _StyleRing:
    """Chronological ring of the last 10 frame records per env."""

    def __init__(self, feats: StyleFeatures, n_envs: int):
        self.feats = feats
        nj = feats.nj
        self.heights = np.zeros((n_envs, WINDOW_LEN))
        self.mats = np.zeros((n_envs, WINDOW_LEN, 3, 3))
        self.lin = np.zeros((n_envs, WINDOW_LEN, 3))
        self.ang = np.zeros((n_envs, WINDOW_LEN, 3))
        self.joint = np.zeros((n_envs, WINDOW_LEN, 12 * nj))

    def fill(self, e: int, record) -> None:
        h, m, li, an, jo = record
        self.heights[e] = h[e]
        self.mats[e] = m[e]
        self.lin[e] = li[e]
        self.ang[e] = an[e]
        self.joint[e] = jo[e]

    def push(self, record) -> None:
        h, m, li, an, jo = record
        for arr, new in (
            (self.heights, h),
            (self.mats, m),
            (self.lin, li),
            (self.ang, an),
            (self.joint, jo),
        ):
            arr[:, :-1] = arr[:, 1:]
            arr[:, -1] = new

    def windows(self) -> np.ndarray:
        return self.feats.build_windows(self.heights, self.mats, self.lin, self.ang, self.joint)


class Trainer:
    def __init__(self, dataset: MotionDataset, cfg: TrainConfig, out_dir, audit: bool = False):
        self.cfg = cfg
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.skel = dataset.skeleton
        self.audit = audit
        self.audit_log: list = []

        seeds = np.random.SeedSequence(cfg.seed).spawn(6)
        self.rng_episode = np.random.default_rng(seeds[0])
        self.rng_rollout = np.random.default_rng(seeds[1])
        self.rng_ppo = np.random.default_rng(seeds[2])
        self.rng_disc = np.random.default_rng(seeds[3])
        aug_seed = int(seeds[4].generate_state(1)[0])
        bank_seed = int(seeds[5].generate_state(1)[0])

        self.mplus = build_mplus(
            dataset, AugmentSpec.for_skeleton(self.skel), cfg.n_combos, seed=aug_seed
        )
        self.fall_bank = (
            generate_fall_bank(self.mplus, cfg.sim, cfg.fall_bank_size, seed=bank_seed)
            if cfg.p_fall > 0
            else []
        )

        self.features = StyleFeatures(self.skel, fps=float(cfg.sim.control_hz))
        real = [self.features.windows_from_clip(c) for c in dataset.raw_clips()]
        self.real_windows = np.concatenate([w for w in real if len(w)], axis=0)
        self.ensemble = DiscriminatorEnsemble.create(
            self.features, hidden=cfg.disc_hidden, seed=cfg.seed + 101
        )
        self.disc_opt = Adam(self.ensemble.params, lr=cfg.disc_lr)
        self.replay = WindowReplay(cfg.replay_capacity, self.features.window_dim)

        self.layout = ObservationLayout(self.skel.joint_count)
        self.action_dim = 3 * self.skel.joint_count
        self.policy = GaussianPolicy(self.layout, self.action_dim, cfg.policy, seed=cfg.seed + 7)
        self.value_net = ValueNet(self.layout, cfg.policy, seed=cfg.seed + 8)
        self.policy_opt = Adam(flat_policy_params(self.policy), lr=cfg.ppo.policy_lr)
        self.value_opt = Adam(self.value_net.params, lr=cfg.ppo.value_lr)

    # -- rollout -------------------------------------------------------------

    def _new_episodes(self) -> tuple[BatchSim, list[Directive]]:
        cfg = self.cfg
        sim = BatchSim(self.skel, cfg.sim, cfg.n_envs)
        directives = []
        for e in range(cfg.n_envs):
            pose = sample_initial_pose(self.mplus, self.fall_bank, cfg.p_fall, self.rng_episode)
            sim.reset_env(e, pose)
            directives.append(build_episode_directive(self.mplus, cfg.episode, self.rng_episode))
        return sim, directives

    def rollout(self):
        cfg = self.cfg
        n = cfg.n_envs
        t_max = cfg.episode.length
        sim, directives = self._new_episodes()
        poses = sim.poses()
        ring = _StyleRing(self.features, n)
        record = self.features.frame_arrays(poses, None)
        for e in range(n):
            ring.fill(e, record)

        obs_buf = np.zeros((t_max, n, self.layout.total_dim))
        act_buf = np.zeros((t_max, n, self.action_dim))
        logp_buf = np.zeros((t_max, n))
        rew_buf = np.zeros((t_max, n))
        val_buf = np.zeros((t_max + 1, n))
        done_buf = np.zeros((t_max, n), dtype=bool)
        stats = {k: 0.0 for k in ("r_h", "r_o", "r_v", "r_l", "r_tr", "r_st", "energy", "total", "fall_fraction")}
        fake_windows = np.zeros((t_max, n, self.features.window_dim))

        for t in range(t_max):
            obs = np.stack(
                [encode_observation(poses[e], directives[e], t) for e in range(n)]
            )
            actions, log_probs = self.policy.sample(obs, self.rng_rollout)
            values, _ = self.value_net.value(obs)
            infos = sim.step(actions.reshape(n, -1, 3))
            prev_poses = poses
            poses = sim.poses()
            fallen = sim.fallen()

            ring.push(self.features.frame_arrays(poses, prev_poses))
            windows = ring.windows()
            fake_windows[t] = windows
            parts, r_sts = style_reward(self.ensemble, windows)

            for e in range(n):
                target = directives[e].target_pose(t + 1)
                r_h, r_o, r_v, r_l = tracking_reward(
                    poses[e], target, directives[e].mask, cfg.tracking
                )
                c_t = energy_cost(
                    infos[e].action_delta,
                    np.zeros_like(infos[e].action_delta),
                    infos[e].torques,
                    cfg.tracking,
                )
                breakdown = RewardBreakdown(
                    r_h=r_h, r_o=r_o, r_v=r_v, r_l=r_l,
                    style_parts=parts[e], r_st=float(r_sts[e]), energy=c_t,
                )
                reward = breakdown.total(cfg.tracking)
                rew_buf[t, e] = reward
                stats["r_h"] += r_h
                stats["r_o"] += r_o
                stats["r_v"] += r_v
                stats["r_l"] += r_l
                stats["r_tr"] += breakdown.r_tr
                stats["r_st"] += breakdown.r_st
                stats["energy"] += c_t
                stats["total"] += reward
                stats["fall_fraction"] += float(fallen[e])
                if self.audit:
                    self.audit_log.append(
                        {
                            "pose": poses[e],
                            "target": target,
                            "mask": directives[e].mask,
                            "action_delta": infos[e].action_delta.copy(),
                            "torques": infos[e].torques.copy(),
                            "style_parts": parts[e].copy(),
                            "reward": reward,
                        }
                    )

            obs_buf[t] = obs
            act_buf[t] = actions
            logp_buf[t] = log_probs
            val_buf[t] = values
            done_buf[t] = t == t_max - 1

        for k in stats:
            stats[k] /= t_max * n
        return obs_buf, act_buf, logp_buf, rew_buf, val_buf, done_buf, fake_windows, stats

    # -- training -------------------------------------------------------------

    def train(self) -> TrainResult:
        cfg = self.cfg
        metrics = []
        paths = []
        csv_path = self.out_dir / "metrics.csv"
        (self.out_dir / "resolved-config.json").write_text(
            json.dumps(cfg.to_json_dict(), indent=1, sort_keys=True) + "\n"
        )
        with open(csv_path, "w") as fh:
            fh.write(",".join(METRIC_COLUMNS) + "\n")
            for it in range(cfg.iterations):
                row = self._iteration(it)
                metrics.append(row)
                fh.write(",".join(_fmt(row[c]) for c in METRIC_COLUMNS) + "\n")
                fh.flush()
                if cfg.checkpoint_every and (it + 1) % cfg.checkpoint_every == 0:
                    paths.append(self.save_checkpoint(self.out_dir / f"ckpt_{it + 1:06d}.mhc", it + 1))
        paths.append(self.save_checkpoint(self.out_dir / "final.mhc", cfg.iterations))
        return TrainResult(metrics=metrics, checkpoint_paths=paths, out_dir=self.out_dir)

    def _iteration(self, it: int) -> dict:
        cfg = self.cfg
        obs, act, logp, rew, val, done, fake, stats = self.rollout()
        n = cfg.n_envs
        t_max = cfg.episode.length

        self.replay.push(fake.reshape(-1, self.features.window_dim))
        disc_stats = {"loss": 0.0, "d_real": 0.0, "d_fake": 0.0}
        for _ in range(cfg.disc_updates):
            real = self.real_windows[
                self.rng_disc.integers(len(self.real_windows), size=cfg.disc_batch)
            ]
            fake_batch = self.replay.sample(self.rng_disc, cfg.disc_batch)
            disc_stats = update_discriminators(
                self.ensemble, real, fake_batch, self.disc_opt, cfg.gp_weight
            )

        adv = np.zeros((t_max, n))
        ret = np.zeros((t_max, n))
        for e in range(n):
            adv[:, e], ret[:, e] = gae_advantages(
                rew[:, e], val[:, e], done[:, e], cfg.ppo.gamma, cfg.ppo.gae_lambda
            )
        ppo_stats = ppo_update(
            self.policy,
            self.value_net,
            self.policy_opt,
            self.value_opt,
            obs.reshape(-1, self.layout.total_dim),
            act.reshape(-1, self.action_dim),
            logp.reshape(-1),
            adv.reshape(-1),
            ret.reshape(-1),
            cfg.ppo,
            self.rng_ppo,
        )

        row = {"iteration": it, **stats}
        row["d_real"] = disc_stats["d_real"]
        row["d_fake"] = disc_stats["d_fake"]
        row["disc_loss"] = disc_stats["loss"]
        row.update({k: ppo_stats[k] for k in ("kl", "clip_fraction", "policy_loss", "value_loss")})
        row["log_std"] = float(np.mean(self.policy.params["log_std"]))
        return row

    def save_checkpoint(self, path, iteration: int):
        tree = {
            "policy": {
                "enc": self.policy.params["enc"],
                "head": self.policy.params["head"],
                "log_std": self.policy.params["log_std"],
            },
            "value": self.value_net.params,
            "disc": self.ensemble.params,
        }
        meta = {
            "iteration": iteration,
            "skeleton": self.skel.name,
            "joint_count": self.skel.joint_count,
            "config": self.cfg.to_json_dict(),
        }
        ckpt.save_tree(path, tree, meta)
        return Path(path)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


SMOKE_SEED = 7
SMOKE_CLIPS = ("walk", "run", "wave", "idle")


def smoke_train_config(ablated: bool = False, iterations: int = 200) -> TrainConfig:
    """The documented desk-scale smoke-training configuration.

    ``ablated`` removes the style reward from the policy's objective (the
    discriminators keep training and logging, so the style metric stays
    comparable across the two runs).
    """
    tracking = TrackingConfig(style_weight=0.0) if ablated else TrackingConfig()
    return TrainConfig(
        seed=SMOKE_SEED,
        iterations=iterations,
        n_envs=8,
        n_combos=6,
        fall_bank_size=12,
        checkpoint_every=0,
        disc_batch=128,
        disc_updates=1,
        tracking=tracking,
        ppo=PpoConfig(max_grad_norm=10.0, target_kl=0.1),
    )


def train(dataset: MotionDataset, cfg: TrainConfig, out_dir, audit: bool = False) -> TrainResult:
    """Train a controller on the dataset's episode distribution."""
    return Trainer(dataset, cfg, out_dir, audit=audit).train()
