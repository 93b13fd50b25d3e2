import numpy as np
import pytest

from mhc.motion import forward_kinematics, rest_pose, sim13_skeleton
from mhc.motion import rotations as rot
from mhc.motion.skeleton import LOWER, ROOT_GROUP, Joint, SkeletonSpec


def chain_skeleton(offsets):
    """Straight chain skeleton: root -> j1 -> j2 -> ..."""
    joints = [Joint("root", -1, (0.0, 0.0, 0.0))]
    labels = {"root": ROOT_GROUP}
    for i, off in enumerate(offsets):
        joints.append(Joint(f"j{i}", i, tuple(off)))
        labels[f"j{i}"] = LOWER
    return SkeletonSpec(name="chain", joints=tuple(joints), part_labels=labels)


def fk_oracle(skel, root_pos, root_mat, joint_mats):
    """Brute-force homogeneous-transform chain, independent of the kernels."""
    nj = skel.joint_count
    world = np.zeros((nj, 3))
    xforms = [None] * nj
    root_x = np.eye(4)
    root_x[:3, :3] = root_mat
    root_x[:3, 3] = root_pos
    for j in range(nj):
        local = np.eye(4)
        local[:3, :3] = joint_mats[j]
        local[:3, 3] = skel.offsets[j]
        parent = root_x if skel.parents[j] < 0 else xforms[skel.parents[j]]
        xforms[j] = parent @ local
        # the joint sits at the parent transform applied to its offset
        world[j] = (parent @ np.append(skel.offsets[j], 1.0))[:3]
    return world


def identity_rot6d(nj):
    return np.tile(rot.IDENTITY_6D, (nj, 1))


def test_identity_fk_is_cumulative_offsets():
    skel = sim13_skeleton()
    glob, local = forward_kinematics(
        skel, np.zeros(3), rot.IDENTITY_6D, identity_rot6d(skel.joint_count)
    )
    # cumulative offsets by walking the tree
    expected = np.zeros((skel.joint_count, 3))
    for j in range(skel.joint_count):
        p = skel.parents[j]
        expected[j] = skel.offsets[j] + (expected[p] if p >= 0 else 0.0)
    np.testing.assert_allclose(glob, expected, atol=1e-15)
    np.testing.assert_allclose(local, expected, atol=1e-15)


def test_translation_equivariance():
    skel = sim13_skeleton()
    q = identity_rot6d(skel.joint_count)
    g0, l0 = forward_kinematics(skel, np.zeros(3), rot.IDENTITY_6D, q)
    g1, l1 = forward_kinematics(skel, np.array([1.0, 2.0, 0.0]), rot.IDENTITY_6D, q)
    np.testing.assert_allclose(g1 - g0, np.broadcast_to([1.0, 2.0, 0.0], g0.shape), atol=1e-15)
    np.testing.assert_array_equal(l1, l0)


def test_two_joint_chain_90deg():
    skel = chain_skeleton([(0, 0, 0.5), (0, 0, 0.5)])
    q = identity_rot6d(2)
    # rotate the middle joint (j0) by 90 degrees about x
    q[0] = rot.matrix_to_sixd(rot.expmap_to_matrix([np.pi / 2, 0.0, 0.0]))
    glob, _ = forward_kinematics(skel, np.zeros(3), rot.IDENTITY_6D, q)
    np.testing.assert_allclose(glob[0], [0.0, 0.0, 0.5], atol=1e-15)
    # Rx(90) maps (0,0,0.5) -> (0,-0.5,0)
    np.testing.assert_allclose(glob[1], [0.0, -0.5, 0.5], atol=1e-12)
    # cross-check against the independent oracle
    oracle = fk_oracle(skel, np.zeros(3), np.eye(3), rot.sixd_to_matrix(q))
    np.testing.assert_allclose(glob, oracle, atol=1e-12)


def test_fk_matches_oracle_random_chains():
    rng = np.random.default_rng(7)
    for _ in range(20):
        offsets = rng.normal(size=(5, 3)) * 0.4
        skel = chain_skeleton(offsets)
        v = rng.normal(size=(5, 3))
        mats = rot.expmap_to_matrix(v)
        q = rot.matrix_to_sixd(mats)
        root_pos = rng.normal(size=3)
        root_mat = rot.expmap_to_matrix(rng.normal(size=3))
        glob, local = forward_kinematics(skel, root_pos, rot.matrix_to_sixd(root_mat), q)
        oracle = fk_oracle(skel, root_pos, root_mat, mats)
        assert np.max(np.abs(glob - oracle)) < 1e-9
        # local should express the oracle in the root frame
        np.testing.assert_allclose(local, (oracle - root_pos) @ root_mat, atol=1e-9)


def test_fk_determinism():
    skel = sim13_skeleton()
    rng = np.random.default_rng(8)
    q = rot.matrix_to_sixd(rot.expmap_to_matrix(rng.normal(size=(skel.joint_count, 3))))
    a = forward_kinematics(skel, np.zeros(3), rot.IDENTITY_6D, q)
    b = forward_kinematics(skel, np.zeros(3), rot.IDENTITY_6D, q)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_rest_pose_feet_on_ground():
    skel = sim13_skeleton()
    p = rest_pose(skel)
    assert p.height == pytest.approx(0.9, abs=1e-12)
    feet = p.joint_global[skel.foot_joints]
    np.testing.assert_allclose(feet[:, 2], 0.0, atol=1e-12)
    p.validate(skel)


def test_batched_fk_matches_per_frame():
    skel = sim13_skeleton()
    rng = np.random.default_rng(9)
    q = rot.matrix_to_sixd(rot.expmap_to_matrix(rng.normal(size=(4, skel.joint_count, 3))))
    root_pos = rng.normal(size=(4, 3))
    root_rot = rot.matrix_to_sixd(rot.expmap_to_matrix(rng.normal(size=(4, 3))))
    gb, lb = forward_kinematics(skel, root_pos, root_rot, q)
    for t in range(4):
        g1, l1 = forward_kinematics(skel, root_pos[t], root_rot[t], q[t])
        np.testing.assert_array_equal(gb[t], g1)
        np.testing.assert_array_equal(lb[t], l1)
