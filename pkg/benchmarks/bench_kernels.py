"""Compare the compiled kernel backend against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--envs N] [--steps N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mhc._kernels import reference as ref
from mhc.data import make_clip
from mhc.motion import rest_pose, sim13_skeleton
from mhc.motion import rotations as rot
from mhc.simcore import SimConfig

try:
    from mhc._kernels import _native as native
except ImportError:
    native = None


def bench_substeps(module, n_envs: int, n_steps: int) -> float:
    skel = sim13_skeleton()
    cfg = SimConfig()
    walk = make_clip(skel, "walk", length=301)
    nj = skel.joint_count
    start = rest_pose(skel)
    rp = np.zeros((n_envs, 3))
    rp[:, 2] = start.height
    rq = np.tile([1.0, 0.0, 0.0, 0.0], (n_envs, 1))
    rv = np.zeros((n_envs, 3))
    rw = np.zeros((n_envs, 3))
    jq = np.tile(ref.quat_from_mat(rot.sixd_to_matrix(start.joint_rot6d)), (n_envs, 1, 1))
    jv = np.zeros((n_envs, nj, 3))
    torque = np.zeros_like(jv)
    kp, kd, tlim = cfg.gain_arrays(nj)
    scal = cfg.pack_scalars(skel.leg_length)
    actions = [
        np.tile(ref.quat_from_mat(rot.sixd_to_matrix(walk.joint_rot6d[t % 300])), (n_envs, 1, 1))
        for t in range(n_steps)
    ]
    t0 = time.perf_counter()
    for act in actions:
        module.sim_substep(
            rp, rq, rv, rw, jq, jv, act, torque,
            skel.parents, skel.offsets, skel.foot_joints, skel.hip_joints,
            kp, kd, tlim, scal,
        )
    return time.perf_counter() - t0


def bench_fk(module, n: int) -> float:
    skel = sim13_skeleton()
    rng = np.random.default_rng(0)
    mats = ref.expmap_to_mat(rng.normal(size=(n, skel.joint_count, 3)))
    t0 = time.perf_counter()
    module.fk_chain(skel.parents, skel.offsets, mats)
    return time.perf_counter() - t0


def bench_rotations(module, n: int) -> float:
    rng = np.random.default_rng(1)
    v = rng.normal(size=(n, 3))
    t0 = time.perf_counter()
    q = module.quat_from_expmap(v)
    module.quat_to_mat(q)
    module.quat_to_expmap(q)
    return time.perf_counter() - t0


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--envs", type=int, default=8)
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args()

    rows = [
        ("sim substeps", lambda m: bench_substeps(m, args.envs, args.steps)),
        ("fk batch 20k", lambda m: bench_fk(m, 20_000)),
        ("rotations 200k", lambda m: bench_rotations(m, 200_000)),
    ]
    print(f"{'kernel':<16}{'python':>12}{'native':>12}{'speedup':>10}")
    for name, fn in rows:
        t_py = fn(ref)
        if native is None:
            print(f"{name:<16}{t_py:>11.3f}s{'n/a':>12}{'':>10}")
            continue
        t_nat = fn(native)
        print(f"{name:<16}{t_py:>11.3f}s{t_nat:>11.3f}s{t_py / t_nat:>9.1f}x")


if __name__ == "__main__":
    main()
