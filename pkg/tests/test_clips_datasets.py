import numpy as np
import pytest

from mhc.data import (
    AugmentSpec,
    MotionDataset,
    build_mplus,
    combine_upper_lower,
    generate_fall_bank,
    make_clip,
    make_clips,
    sample_initial_pose,
)
from mhc.errors import ClipTooShort, EmptyBank, SchemaError
from mhc.motion import apply_inplane_rotation, sim13_skeleton
from mhc.motion import rotations as rot
from mhc.simcore import SimConfig


@pytest.fixture(scope="module")
def skel():
    return sim13_skeleton()


@pytest.fixture(scope="module")
def dataset(skel):
    return MotionDataset(clips=make_clips(skel, ("walk", "run", "wave", "idle")), skeleton=skel)


# --- synthetic clips / io -----------------------------------------------------


def test_synthetic_clips_validate(skel):
    for clip in make_clips(skel):
        clip.validate()  # FK + velocity consistency within the documented tolerances
        assert len(clip) == 300
        assert clip.fps == 30.0


def test_clip_json_roundtrip(tmp_path, skel):
    clip = make_clip(skel, "walk", length=40)
    path = tmp_path / "walk.json"
    clip.save(path)
    loaded = clip.load(path, skel)
    np.testing.assert_allclose(loaded.root_pos, clip.root_pos, atol=1e-12)
    np.testing.assert_allclose(loaded.joint_rot6d, clip.joint_rot6d, atol=1e-12)
    np.testing.assert_allclose(loaded.joint_global, clip.joint_global, atol=1e-10)


def test_clip_loader_recomputes_positions(tmp_path, skel):
    clip = make_clip(skel, "idle", length=20)
    path = tmp_path / "idle.json"
    clip.save(path, include_positions=False)
    loaded = clip.load(path, skel)
    np.testing.assert_allclose(loaded.joint_global, clip.joint_global, atol=1e-10)
    np.testing.assert_allclose(loaded.joint_local, clip.joint_local, atol=1e-10)


def test_clip_loader_rejects_bad_positions(tmp_path, skel):
    import json

    clip = make_clip(skel, "idle", length=10)
    doc = clip.to_json_dict()
    doc["frames"][3]["joint_global_pos"][2][2] += 0.5
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        clip.load(path, skel)


def test_dataset_directory_roundtrip(tmp_path, dataset):
    dataset.save(tmp_path / "ds")
    loaded = MotionDataset.load(tmp_path / "ds")
    assert [c.name for c in loaded.clips] == [c.name for c in dataset.clips]
    assert loaded.frame_count == dataset.frame_count


# --- in-plane rotation ---------------------------------------------------------


def test_inplane_rotation_zero_is_identity(skel):
    clip = make_clip(skel, "walk", length=30)
    out = apply_inplane_rotation(clip, 0.0, (0.0, 0.0))
    np.testing.assert_array_equal(out.root_pos, clip.root_pos)
    np.testing.assert_array_equal(out.root_rot6d, clip.root_rot6d)


def test_inplane_rotation_pi_about_first_root(skel):
    clip = make_clip(skel, "walk", length=30)
    pivot = clip.root_pos[0, :2]
    out = apply_inplane_rotation(clip, np.pi, pivot)
    np.testing.assert_allclose(out.root_pos[0], clip.root_pos[0], atol=1e-12)
    yaw0 = rot.yaw_of_matrix(rot.sixd_to_matrix(clip.root_rot6d[0]))
    yaw1 = rot.yaw_of_matrix(rot.sixd_to_matrix(out.root_rot6d[0]))
    assert abs(abs(rot.wrap_angle(yaw1 - yaw0)) - np.pi) < 1e-9
    # heights and local positions untouched
    np.testing.assert_array_equal(out.root_pos[:, 2], clip.root_pos[:, 2])
    np.testing.assert_array_equal(out.joint_local, clip.joint_local)
    # rotated clip is still self-consistent
    out.validate()


def test_inplane_rotation_composes(skel):
    clip = make_clip(skel, "run", length=20)
    a = apply_inplane_rotation(apply_inplane_rotation(clip, 0.7, (1.0, -2.0)), 0.9, (1.0, -2.0))
    b = apply_inplane_rotation(clip, 1.6, (1.0, -2.0))
    np.testing.assert_allclose(a.root_pos, b.root_pos, atol=1e-9)
    np.testing.assert_allclose(a.root_rot6d, b.root_rot6d, atol=1e-9)
    np.testing.assert_allclose(a.joint_global, b.joint_global, atol=1e-9)


# --- combination ----------------------------------------------------------------


def test_self_combination_is_identity(skel, dataset):
    walk = dataset.clips[0]
    combo = combine_upper_lower(walk, walk, len(walk))
    np.testing.assert_array_equal(combo.joint_rot6d, walk.joint_rot6d)
    np.testing.assert_allclose(combo.joint_global, walk.joint_global, atol=1e-12)
    assert combo.source == "combined"


def test_combination_channel_provenance(skel, dataset):
    walk, wave = dataset.clips[0], dataset.clips[2]
    combo = combine_upper_lower(walk, wave, 100)
    np.testing.assert_array_equal(
        combo.joint_rot6d[:, skel.lower_joints], walk.joint_rot6d[:100, skel.lower_joints]
    )
    np.testing.assert_array_equal(
        combo.joint_rot6d[:, skel.upper_joints], wave.joint_rot6d[:100, skel.upper_joints]
    )
    np.testing.assert_array_equal(combo.root_pos, walk.root_pos[:100])
    np.testing.assert_array_equal(combo.lin_vel, walk.lin_vel[:100])
    combo.validate()


def test_combination_too_short_raises(skel, dataset):
    with pytest.raises(ClipTooShort):
        combine_upper_lower(dataset.clips[0], dataset.clips[1], 10_000)


def test_upper_lower_partition(skel):
    spec = AugmentSpec.for_skeleton(skel)
    union = set(spec.upper_joints.tolist()) | set(spec.lower_joints.tolist())
    assert union == set(range(skel.joint_count))
    assert not set(spec.upper_joints.tolist()) & set(spec.lower_joints.tolist())


# --- M+ -------------------------------------------------------------------------


def test_build_mplus_counts(skel, dataset):
    spec = AugmentSpec.for_skeleton(skel)
    m0 = build_mplus(dataset, spec, n_combos=0, seed=5)
    assert len(m0.clips) == len(dataset.clips)
    m5 = build_mplus(dataset, spec, n_combos=5, seed=5)
    assert len(m5.clips) == len(dataset.clips) + 5
    assert sum(c.source == "combined" for c in m5.clips) == 5
    for c in m5.clips:
        c.validate()


def test_build_mplus_deterministic(skel, dataset):
    spec = AugmentSpec.for_skeleton(skel)
    a = build_mplus(dataset, spec, n_combos=4, seed=9)
    b = build_mplus(dataset, spec, n_combos=4, seed=9)
    for ca, cb in zip(a.clips, b.clips):
        np.testing.assert_array_equal(ca.root_pos, cb.root_pos)
        np.testing.assert_array_equal(ca.joint_rot6d, cb.joint_rot6d)


def test_dataset_sampling_uniform(skel, dataset):
    rng = np.random.default_rng(21)
    n = 20_000
    counts = np.zeros(len(dataset.clips))
    for _ in range(n):
        ci, fi = dataset.index[rng.integers(dataset.frame_count)]
        counts[ci] += 1
    # all clips have equal length here, so clip frequencies are uniform
    expected = n / len(dataset.clips)
    chi2 = np.sum((counts - expected) ** 2 / expected)
    # chi-square with 3 dof: 16.3 is the 0.1% tail
    assert chi2 < 16.3


# --- fall bank / initial pose ---------------------------------------------------


@pytest.fixture(scope="module")
def fall_bank(dataset):
    return generate_fall_bank(dataset, SimConfig(), count=8, seed=3)


def test_fall_bank_poses_are_fallen(dataset, fall_bank):
    from mhc.simcore import detect_fall

    cfg = SimConfig()
    assert len(fall_bank) == 8
    for pose in fall_bank:
        assert detect_fall(pose, cfg)
        pose.validate(dataset.skeleton)


def test_sample_initial_pose_branches(dataset, fall_bank):
    rng = np.random.default_rng(4)
    p0 = sample_initial_pose(dataset, fall_bank, 0.0, rng)
    assert p0.height > 0.3  # dataset poses stand
    p1 = sample_initial_pose(dataset, [], 0.0, rng)  # empty bank fine at weight 0
    with pytest.raises(EmptyBank):
        sample_initial_pose(dataset, [], 0.5, rng)
    fallen = sample_initial_pose(dataset, fall_bank, 1.0, rng)
    assert fallen.height < 0.5


def test_sample_initial_pose_fall_fraction(dataset, fall_bank):
    from mhc.simcore import detect_fall

    cfg = SimConfig()
    rng = np.random.default_rng(6)
    n = 20_000
    falls = 0
    for _ in range(n):
        pose = sample_initial_pose(dataset, fall_bank, 0.1, rng)
        falls += detect_fall(pose, cfg)
    # binomial 3 sigma around the configured weight
    assert abs(falls / n - 0.1) < 3 * np.sqrt(0.1 * 0.9 / n) + 1e-3
