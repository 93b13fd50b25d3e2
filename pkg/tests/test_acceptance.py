"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the smoke-training criterion trains two controllers and dominates
the runtime (several minutes on 8 cores).
"""

import time

import numpy as np
import pytest

import mhc.directives as dv
from mhc.adversary import DiscriminatorEnsemble, StyleFeatures, discriminator_loss
from mhc.cli import main as cli_main
from mhc.data import MotionDataset, generate_fall_bank, make_clips, sample_initial_pose
from mhc.directives import EpisodeSpec, ObservationLayout, plan_episode
from mhc.learn.nets import MlpSpec, forward, init_params, mlp_forward_backward
from mhc.learn.policy import GaussianPolicy, PolicyConfig, ValueNet
from mhc.learn.trainer import SMOKE_CLIPS, smoke_train_config, train
from mhc.motion import forward_kinematics, rest_pose, sim13_skeleton
from mhc.motion import rotations as rot
from mhc.motion.pose import Pose
from mhc.rewards import TrackingConfig, energy_cost, tracking_reward
from mhc.simcore import SimConfig, detect_fall

from test_adversary_nets import tiny_skeleton
from test_fk import chain_skeleton, fk_oracle
from test_planning import brute_force_values, goto_flip_fraction, random_finite_mdp, swing_vs_go
from test_rewards import random_mask, random_pose


def report(name: str, started: float, detail: str = "") -> None:
    extra = f" [{detail}]" if detail else ""
    print(f"\nACCEPTANCE {name}: PASS ({time.time() - started:.1f}s){extra}")


@pytest.fixture(scope="module")
def skel():
    return sim13_skeleton()


@pytest.fixture(scope="module")
def dataset(skel):
    return MotionDataset(clips=make_clips(skel, SMOKE_CLIPS), skeleton=skel)


# -- reward kernel exactness ---------------------------------------------------


def test_criterion_reward_kernel_exactness(skel):
    t0 = time.time()
    cfg = TrackingConfig()
    pose = rest_pose(skel)
    target = Pose.from_kinematics(
        skel, pose.root_pos + [0, 0, 0.1], pose.root_rot6d, pose.lin_vel, pose.ang_vel, pose.joint_rot6d
    )
    r_h, r_o, r_v, r_l = tracking_reward(pose, target, dv.full_pose_mask(skel.joint_count), cfg)
    assert abs(r_h - np.exp(-0.8)) < 1e-12
    assert (r_o, r_v, r_l) == (0.0, 0.0, 0.0)

    rng = np.random.default_rng(100)
    menu = dv.channel_mask_menu(skel.joint_count)
    for _ in range(10_000):
        a, b = random_pose(skel, rng), random_pose(skel, rng)
        mask = menu[int(rng.integers(len(menu)))]
        rh, ro, rv, rl = tracking_reward(a, b, mask, cfg)
        assert not (rh <= 0.9 and ro != 0.0)
        assert not (ro <= 0.9 and rv != 0.0)
        assert not (rv <= 0.9 and rl != 0.0)
        assert 0.0 <= rh <= 1.0 and 0.0 <= ro <= 1.0 and 0.0 <= rv <= 1.0 and 0.0 <= rl <= 1.0

    # mask neutrality: 10^4 perturbations of unselected target dimensions
    pairs = [(random_pose(skel, rng), random_pose(skel, rng), random_mask(skel, rng)) for _ in range(200)]
    checked = 0
    for a, b, mask in pairs:
        base = tracking_reward(a, b, mask, cfg)
        for _ in range(50):
            t2 = {
                "root_pos": b.root_pos.copy(),
                "root_rot6d": b.root_rot6d.copy(),
                "lin_vel": b.lin_vel.copy(),
                "ang_vel": b.ang_vel.copy(),
                "joint_rot6d": b.joint_rot6d.copy(),
                "joint_local": b.joint_local.copy(),
                "joint_global": b.joint_global.copy(),
            }
            dim = int(rng.integers(5))
            if dim == 0 and not mask.selects_height:
                t2["root_pos"][2] += rng.normal()
            elif dim == 1 and not mask.selects_velocity:
                t2["lin_vel"][:2] += rng.normal(size=2)
            elif dim == 2 and mask.position_channel != dv.L:
                t2["joint_local"] += rng.normal()
            elif dim == 3 and mask.position_channel != dv.G:
                t2["joint_global"] += rng.normal()
            else:
                unsel = ~mask.joint_mask
                if mask.position_channel == dv.L and unsel.any():
                    t2["joint_local"][unsel] += rng.normal()
                elif mask.position_channel == dv.G and unsel.any():
                    t2["joint_global"][unsel] += rng.normal()
            perturbed = Pose(**t2)
            assert tracking_reward(a, perturbed, mask, cfg) == base
            checked += 1
    assert checked == 10_000

    c = energy_cost(np.array([[0.5, 0, 0]]), np.zeros((1, 3)), np.array([[10.0, 0, 0]]), cfg)
    assert c == 0.007
    assert time.time() - t0 < 10.0
    report("reward-kernel-exactness", t0)


# -- rotation / fk ----------------------------------------------------------------


def test_criterion_rotation_fk():
    t0 = time.time()
    rng = np.random.default_rng(101)
    v = rng.normal(size=(1000, 3))
    v = v / np.linalg.norm(v, axis=-1, keepdims=True) * rng.uniform(0, np.pi * 0.999, (1000, 1))
    mats = rot.expmap_to_matrix(v)
    back = rot.sixd_to_matrix(rot.matrix_to_sixd(mats))
    assert np.max(np.abs(back - mats)) < 1e-9

    for _ in range(30):
        skel5 = chain_skeleton(rng.normal(size=(5, 3)) * 0.4)
        m = rot.expmap_to_matrix(rng.normal(size=(5, 3)))
        root_pos = rng.normal(size=3)
        root_mat = rot.expmap_to_matrix(rng.normal(size=3))
        glob, _ = forward_kinematics(skel5, root_pos, rot.matrix_to_sixd(root_mat), rot.matrix_to_sixd(m))
        oracle = fk_oracle(skel5, root_pos, root_mat, m)
        assert np.max(np.abs(glob - oracle)) < 1e-9
    assert time.time() - t0 < 5.0
    report("rotation-fk", t0)


# -- gradient checks ---------------------------------------------------------------


def _probe(loss_and_grads, params, rng, n, eps=1e-6):
    base, grads = loss_and_grads()
    worst = 0.0
    keys = sorted(params)
    for _ in range(n):
        k = keys[rng.integers(len(keys))]
        idx = tuple(rng.integers(s) for s in params[k].shape)
        old = params[k][idx]
        params[k][idx] = old + eps
        up, _ = loss_and_grads()
        params[k][idx] = old - eps
        dn, _ = loss_and_grads()
        params[k][idx] = old
        fd = (up - dn) / (2 * eps)
        scale = max(abs(fd), abs(grads[k][idx]), 1e-3)
        worst = max(worst, abs(fd - grads[k][idx]) / scale)
    return worst


def test_criterion_gradient_checks():
    t0 = time.time()
    rng = np.random.default_rng(102)
    draws = 0
    worst = 0.0

    # policy-shaped and value-shaped MLPs
    for sizes in ((12, (16, 8), 4), (20, (24,), 1)):
        for _ in range(3):
            spec = MlpSpec(sizes[0], sizes[1], sizes[2])
            params = init_params(spec, rng, final_scale=1.0)
            x = rng.normal(size=(5, sizes[0]))
            seed = rng.normal(size=(5, sizes[2]))

            def f():
                y, grads, _ = mlp_forward_backward(spec, params, x, seed)
                return float(np.sum(y * seed)), grads

            worst = max(worst, _probe(f, params, rng, 12))
            draws += 12

    # discriminator ensemble loss including the R1 penalty, across the
    # supported trunk depths
    feats = StyleFeatures(tiny_skeleton())
    for s, hidden in enumerate(((12,), (9, 7), (8, 6, 4))):
        ens = DiscriminatorEnsemble.create(feats, hidden=hidden, seed=200 + s)
        real = rng.normal(size=(4, feats.window_dim))
        fake = rng.normal(size=(4, feats.window_dim))

        def f():
            loss, grads, _ = discriminator_loss(ens, real, fake, gp_weight=5.0)
            return loss, grads

        worst = max(worst, _probe(f, ens.params, rng, 15))
        draws += 15
    assert draws >= 50
    assert worst < 1e-4
    assert time.time() - t0 < 60.0
    report("gradient-checks", t0, f"{draws} draws, worst rel err {worst:.2e}")


# -- dac-mdp -------------------------------------------------------------------------


def test_criterion_dacmdp_oracle():
    from mhc.planning import build_dac_mdp, value_iteration

    t0 = time.time()
    rng = np.random.default_rng(103)
    for _ in range(100):
        ts, points, nxt, rew = random_finite_mdp(rng)
        mdp = build_dac_mdp(ts, k=1, smoothing_cost=0.0, gamma=0.95)
        v = value_iteration(mdp, tol=1e-12)
        oracle = brute_force_values(nxt, rew, 0.95)
        ours = np.array([max(mdp.q_value(points[s], a, v) for a in range(3)) for s in range(20)])
        assert np.max(np.abs(ours - oracle)) < 1e-6

    for k in (1, 3, 5):
        for c in (0.0, 0.1, 1.0):
            assert swing_vs_go(0.9, k, c) == 0
            assert swing_vs_go(0.999, k, c) == 1
    assert time.time() - t0 < 30.0
    report("dacmdp-oracle", t0)


def test_criterion_reward_negation_flip():
    t0 = time.time()
    n, total, rate = goto_flip_fraction()
    assert n >= 500
    assert rate >= 0.9
    assert time.time() - t0 < 120.0
    report("reward-negation-flip", t0, f"{rate:.1%} of {total} far states, {n} transitions")


# -- episode distribution --------------------------------------------------------------


def test_criterion_episode_distribution(skel, dataset):
    t0 = time.time()
    n = 100_000
    rng = np.random.default_rng(104)
    spec = EpisodeSpec()

    menu_counts = np.zeros(len(dv.MENU_NAMES))
    applied = 0
    for _ in range(n):
        plan = plan_episode(dataset, spec, rng)
        menu_counts[plan.menu_index] += 1
        applied += plan.joint_mask_applied
        for _, _, length, _ in plan.segments:
            assert spec.subseq_min <= length <= spec.subseq_max
    assert np.all(np.abs(menu_counts / n - 0.2) < 0.01)
    assert abs(applied / n - 0.5) < 0.01

    cfg = SimConfig()
    bank = generate_fall_bank(dataset, cfg, count=12, seed=105)
    rng2 = np.random.default_rng(106)
    falls = sum(
        detect_fall(sample_initial_pose(dataset, bank, 0.1, rng2), cfg) for _ in range(n)
    )
    assert abs(falls / n - 0.1) < 0.01

    # mask constancy: one mask drives every frame of a realized directive
    rng3 = np.random.default_rng(107)
    for _ in range(50):
        directive = dv.build_episode_directive(dataset, spec, rng3)
        assert len(directive) == spec.length
        doc = dv.directive_to_json_dict(directive)
        assert doc["mask"] == directive.mask.to_json_dict()
        present = {key for f in doc["frames"] for key in f}
        assert all(
            present == {k for k in doc["frames"][0]} for f in doc["frames"]
        )
    report("episode-distribution", t0, f"fall {falls / n:.4f}, joint-mask {applied / n:.4f}")


# -- metrics ---------------------------------------------------------------------------


def test_criterion_metric_correctness(skel, dataset):
    from mhc.evaluation import fail_frame_fraction, mpjpe, success_rate

    t0 = time.time()
    clip = dataset.clips[0]
    jm = np.zeros(skel.joint_count, dtype=bool)
    jm[[2, 3, 4, 5]] = True
    mask = dv.DirectiveMask(frozenset({dv.L}), jm)
    d = dv.Directive(track=dv.TargetTrack.from_clip(clip), mask=mask)
    shifted = clip.slice(0, len(clip))
    shifted.joint_local[:, 2, 0] += 0.05
    assert mpjpe(shifted, d) == pytest.approx(12.5, abs=1e-9)

    full = dv.Directive(track=dv.TargetTrack.from_clip(clip), mask=dv.full_pose_mask(skel.joint_count))
    t = len(clip)
    partial = clip.slice(0, t)
    partial.joint_local[: int(round(0.05 * t)), 0, 0] += 1.2
    assert success_rate(partial, full, 0.10)
    worse = clip.slice(0, t)
    worse.joint_local[: int(round(0.15 * t)), 0, 0] += 1.2
    assert not success_rate(worse, full, 0.10)
    assert success_rate(worse, full, 0.25)
    assert fail_frame_fraction(worse, full) == pytest.approx(0.15, abs=0.01)
    report("metric-correctness", t0)


# -- smoke training ----------------------------------------------------------------------


def test_criterion_smoke_training(dataset, tmp_path_factory):
    t0 = time.time()
    out = tmp_path_factory.mktemp("smoke")
    full = train(dataset, smoke_train_config(), out / "full")
    ablated = train(dataset, smoke_train_config(ablated=True), out / "ablated")

    baseline = full.metrics[0]["r_tr"]
    final = float(np.mean([m["r_tr"] for m in full.metrics[-10:]]))
    ratio = final / baseline
    assert ratio >= 1.5, f"tracking reward ratio {ratio:.2f} (baseline {baseline:.3f}, final {final:.3f})"

    tail = len(full.metrics) // 4
    style_full = float(np.mean([m["r_st"] for m in full.metrics[-tail:]]))
    style_ablated = float(np.mean([m["r_st"] for m in ablated.metrics[-tail:]]))
    assert style_ablated < style_full
    assert time.time() - t0 < 1800.0
    report(
        "smoke-training",
        t0,
        f"r_tr {baseline:.3f}->{final:.3f} ({ratio:.2f}x); style full {style_full:.3f} vs ablated {style_ablated:.3f}",
    )


# -- determinism -----------------------------------------------------------------------


def test_criterion_cli_determinism(tmp_path):
    t0 = time.time()
    cli_main(["dataset", "synth", "--out", str(tmp_path / "ds"), "--clips", "walk,idle", "--length", "260"])

    cfg = {
        "iterations": 2,
        "n_envs": 2,
        "n_combos": 1,
        "fall_bank_size": 2,
        "checkpoint_every": 0,
        "disc_hidden": [32],
        "disc_batch": 16,
        "disc_updates": 1,
        "episode": {"length": 40, "subseq_min": 20, "subseq_max": 40},
        "policy": {"enc_hidden": [32], "enc_out": 16, "head_hidden": [32], "value_hidden": [32]},
        "ppo": {"epochs": 2, "minibatches": 2},
    }
    import json

    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    for run in ("t1", "t2"):
        code = cli_main([
            "train", "--config", str(tmp_path / "cfg.json"), "--dataset", str(tmp_path / "ds"),
            "--out", str(tmp_path / run),
        ])
        assert code == 0
    assert (tmp_path / "t1" / "metrics.csv").read_bytes() == (tmp_path / "t2" / "metrics.csv").read_bytes()

    for run in ("e1.csv", "e2.csv"):
        code = cli_main([
            "eval", "imitate", "--checkpoint", str(tmp_path / "t1" / "final.mhc"),
            "--dataset", str(tmp_path / "ds"), "--seed", "3", "--csv", str(tmp_path / run),
            "--episodes", "2",
        ])
        assert code == 0
    assert (tmp_path / "e1.csv").read_bytes() == (tmp_path / "e2.csv").read_bytes()
    report("cli-determinism", t0)
