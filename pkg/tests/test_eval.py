import numpy as np
import pytest

from mhc import directives as dv
from mhc import evaluation as ev
from mhc.data import MotionDataset, make_clips
from mhc.errors import LengthMismatch, NoSelectedJoints
from mhc.motion import sim13_skeleton
from mhc.simcore import SimConfig


@pytest.fixture(scope="module")
def skel():
    return sim13_skeleton()


@pytest.fixture(scope="module")
def dataset(skel):
    return MotionDataset(clips=make_clips(skel, ("walk", "wave", "idle")), skeleton=skel)


def full_directive(clip, nj):
    return dv.Directive.from_clip(clip, dv.full_pose_mask(nj))


def test_mpjpe_identity(dataset, skel):
    clip = dataset.clips[0]
    d = full_directive(clip, skel.joint_count)
    assert ev.mpjpe(clip, d) == 0.0
    assert ev.success_rate(clip, d)


def test_mpjpe_constructed_offset(dataset, skel):
    # one of 4 selected joints offset by 0.05 m on every frame -> 12.5 mm
    clip = dataset.clips[0]
    jm = np.zeros(skel.joint_count, dtype=bool)
    jm[[2, 3, 4, 5]] = True
    mask = dv.DirectiveMask(frozenset({dv.L}), jm)
    d = dv.Directive(track=dv.TargetTrack.from_clip(clip), mask=mask)
    shifted = clip.slice(0, len(clip))
    shifted.joint_local[:, 2, 0] += 0.05
    assert ev.mpjpe(shifted, d) == pytest.approx(12.5, abs=1e-9)


def test_mpjpe_masked_joint_excluded(dataset, skel):
    clip = dataset.clips[0]
    jm = np.ones(skel.joint_count, dtype=bool)
    jm[7] = False
    mask = dv.DirectiveMask(frozenset({dv.L}), jm)
    d = dv.Directive(track=dv.TargetTrack.from_clip(clip), mask=mask)
    corrupted = clip.slice(0, len(clip))
    corrupted.joint_local[:, 7] += 99.0
    assert ev.mpjpe(corrupted, d) == 0.0


def test_mpjpe_errors(dataset, skel):
    clip = dataset.clips[0]
    d = full_directive(clip, skel.joint_count)
    with pytest.raises(LengthMismatch):
        ev.mpjpe(clip.slice(0, 10), d)
    empty = dv.DirectiveMask(frozenset({dv.G}), np.zeros(skel.joint_count, dtype=bool) | False)
    # a position channel with zero selected joints cannot be scored
    d_empty = dv.Directive(track=dv.TargetTrack.from_clip(clip), mask=empty)
    with pytest.raises(NoSelectedJoints):
        ev.mpjpe(clip, d_empty)


def test_success_budgets(dataset, skel):
    clip = dataset.clips[0]
    d = full_directive(clip, skel.joint_count)
    t = len(clip)
    # 5% of frames fail: success at 0.10
    bad = clip.slice(0, t)
    n_bad = int(round(0.05 * t))
    bad.joint_local[:n_bad, 0, 0] += 1.2
    assert ev.fail_frame_fraction(bad, d) == pytest.approx(n_bad / t)
    assert ev.success_rate(bad, d, 0.10)
    # 15% fail: failure at 0.10, success at 0.25
    worse = clip.slice(0, t)
    worse.joint_local[: int(round(0.15 * t)), 0, 0] += 1.2
    assert not ev.success_rate(worse, d, 0.10)
    assert ev.success_rate(worse, d, 0.25)


def test_exactly_at_budget_fails(dataset, skel):
    clip = dataset.clips[0].slice(0, 20)
    d = full_directive(clip, skel.joint_count)
    bad = clip.slice(0, 20)
    bad.joint_local[:2, 0, 0] += 1.5  # exactly 10%
    assert not ev.success_rate(bad, d, 0.10)


def test_teleport_oracle_imitate(dataset):
    params = ev.ProtocolParams(n_episodes=3, episode_length=60)
    reports = ev.run_protocol("imitate", ev.TeleportController(), dataset, params, seed=0)
    assert len(reports) == 1
    r = reports[0]
    assert r.mean_mpjpe == pytest.approx(0.0, abs=1e-6)
    assert r.success_fraction == 1.0


def test_protocol_determinism(dataset):
    params = ev.ProtocolParams(n_episodes=2, episode_length=40)
    a = ev.run_protocol("catchup", ev.ZeroController(), dataset, params, seed=5)
    b = ev.run_protocol("catchup", ev.ZeroController(), dataset, params, seed=5)
    assert [e.mpjpe_mm for e in a[0].episodes] == [e.mpjpe_mm for e in b[0].episodes]
    assert a[0].budget == ev.CATCHUP_BUDGET


def test_complete_cells(dataset, skel):
    params = ev.ProtocolParams(n_episodes=1, episode_length=30)
    reports = ev.run_protocol("complete", ev.TeleportController(), dataset, params, seed=2)
    assert len(reports) == 5 + 4
    names = [r.mask_desc for r in reports]
    assert "channel:keypoints" in names and "gmask:0.75" in names
    # teleport tracks exactly regardless of masking; proprio cell has no
    # position channel and measures over all joints
    for r in reports:
        assert r.success_fraction == 1.0


def test_combine_protocol_runs(dataset):
    params = ev.ProtocolParams(n_episodes=2, episode_length=50)
    reports = ev.run_protocol("combine", ev.TeleportController(), dataset, params, seed=3)
    assert reports[0].mean_mpjpe == pytest.approx(0.0, abs=1e-6)


def test_report_aggregates_match_rows(dataset):
    params = ev.ProtocolParams(n_episodes=3, episode_length=40)
    r = ev.run_protocol("imitate", ev.ZeroController(), dataset, params, seed=1)[0]
    rows = r.rows()
    assert len(rows) == 3
    assert r.mean_mpjpe == pytest.approx(np.mean([x["mpjpe_mm"] for x in rows]))
    assert r.success_fraction == pytest.approx(np.mean([x["success"] for x in rows]))
