"""Agreement between the compiled kernels and the numpy fallback."""

import numpy as np
import pytest

import mhc._kernels as K
from mhc._kernels import reference as ref
from mhc.data import make_clip
from mhc.motion import rest_pose, sim13_skeleton
from mhc.motion import rotations as rot
from mhc.simcore import BatchSim, SimConfig

try:
    from mhc._kernels import _native as native
except ImportError:
    native = None

needs_native = pytest.mark.skipif(native is None, reason="compiled backend not built")


@needs_native
def test_rotation_kernels_agree():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(500, 3)) * 2.0
    np.testing.assert_allclose(native.quat_from_expmap(v), ref.quat_from_expmap(v), atol=1e-15)
    q = ref.quat_from_expmap(v)
    np.testing.assert_allclose(native.quat_to_expmap(q), ref.quat_to_expmap(q), atol=1e-13)
    np.testing.assert_allclose(native.quat_to_mat(q), ref.quat_to_mat(q), atol=1e-15)
    m = ref.quat_to_mat(q)
    np.testing.assert_allclose(native.quat_from_mat(m), ref.quat_from_mat(m), atol=1e-13)
    q2 = ref.quat_from_expmap(rng.normal(size=(500, 3)))
    np.testing.assert_allclose(native.quat_mul(q, q2), ref.quat_mul(q, q2), atol=1e-15)
    r6 = rng.normal(size=(300, 6))
    np.testing.assert_allclose(native.rot6d_to_mat(r6), ref.rot6d_to_mat(r6), atol=1e-13)
    for a, b in zip(native.rot6d_norms(r6), ref.rot6d_norms(r6)):
        np.testing.assert_allclose(a, b, atol=1e-13)


@needs_native
def test_fk_chain_agrees():
    skel = sim13_skeleton()
    rng = np.random.default_rng(1)
    mats = ref.expmap_to_mat(rng.normal(size=(16, skel.joint_count, 3)))
    a = native.fk_chain(skel.parents, skel.offsets, mats)
    b = ref.fk_chain(skel.parents, skel.offsets, mats)
    np.testing.assert_allclose(a, b, atol=1e-12)


def _run_sim(module, n_steps=60, n_envs=3):
    skel = sim13_skeleton()
    cfg = SimConfig()
    walk = make_clip(skel, "walk", length=n_steps + 1)
    nj = skel.joint_count
    rp = np.zeros((n_envs, 3))
    rq = np.tile([1.0, 0.0, 0.0, 0.0], (n_envs, 1))
    rv = np.zeros((n_envs, 3))
    rw = np.zeros((n_envs, 3))
    start = rest_pose(skel)
    rp[:, 2] = start.height
    jq = np.tile(ref.quat_from_mat(rot.sixd_to_matrix(start.joint_rot6d)), (n_envs, 1, 1))
    jv = np.zeros((n_envs, nj, 3))
    kp, kd, tlim = cfg.gain_arrays(nj)
    scal = cfg.pack_scalars(skel.leg_length)
    torque = np.zeros_like(jv)
    for t in range(n_steps):
        act = ref.quat_from_mat(rot.sixd_to_matrix(walk.joint_rot6d[t + 1]))
        act = np.tile(act, (n_envs, 1, 1))
        status = module.sim_substep(
            rp, rq, rv, rw, jq, jv, act, torque,
            skel.parents, skel.offsets, skel.foot_joints, skel.hip_joints,
            kp, kd, tlim, scal,
        )
        assert status == 0
    return rp, rq, rv, rw, jq, jv, torque


@needs_native
def test_sim_substep_agrees():
    out_native = _run_sim(native)
    out_ref = _run_sim(ref)
    for a, b in zip(out_native, out_ref):
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


@needs_native
def test_sim_substep_deterministic_per_backend():
    for module in (native, ref):
        a = _run_sim(module, n_steps=30)
        b = _run_sim(module, n_steps=30)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


def test_active_backend_static_rest_exact():
    # the selected backend keeps the rest state bitwise fixed (both must)
    skel = sim13_skeleton()
    sim = BatchSim(skel, SimConfig(), 1)
    sim.reset_env(0, rest_pose(skel))
    before = sim.root_pos.copy(), sim.joint_quat.copy(), sim.root_quat.copy()
    act = sim.prev_action.copy()
    for _ in range(10):
        sim.step(act)
    np.testing.assert_array_equal(sim.root_pos, before[0])
    np.testing.assert_array_equal(sim.joint_quat, before[1])
    np.testing.assert_array_equal(sim.root_quat, before[2])
