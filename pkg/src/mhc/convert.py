"""Multi-modal directive converters.

File-based stand-ins for live capture front-ends: keypoint tracks become
global-position directives with occlusion masks, root-command tables
become joystick directives, and full clips become fully specified pose
directives.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import directives as dv
from .errors import SchemaError
from .motion import rotations as rot
from .motion.clip import CLIP_SCHEMA, MotionClip
from .motion.skeleton import SkeletonSpec

KEYPOINTS_SCHEMA = "mhc-keypoints/1"
ROOTCMD_SCHEMA = "mhc-rootcmd/1"


def keypoints_to_directive(doc: dict, skel: SkeletonSpec) -> dv.Directive:
    """Global keypoint tracks -> G-channel directive; the mask selects the
    tracked (un-occluded) joints only."""
    try:
        names = list(doc["joint_names"])
        frames = np.asarray(doc["frames"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"malformed keypoint file: {e}") from e
    if frames.ndim != 3 or frames.shape[1] != len(names) or frames.shape[2] != 3:
        raise SchemaError(f"keypoint frames have shape {frames.shape}, expected (T, {len(names)}, 3)")
    nj = skel.joint_count
    index = {n: i for i, n in enumerate(skel.joint_names)}
    unknown = [n for n in names if n not in index]
    if unknown:
        raise SchemaError(f"unknown joints in keypoint file: {unknown}")
    t = frames.shape[0]
    joint_global = np.zeros((t, nj, 3))
    selected = np.zeros(nj, dtype=bool)
    for k, name in enumerate(names):
        j = index[name]
        joint_global[:, j] = frames[:, :, :][:, k]
        selected[j] = True
    track = dv.TargetTrack(
        root_pos=np.zeros((t, 3)),
        root_rot6d=np.tile(rot.IDENTITY_6D, (t, 1)),
        lin_vel=np.zeros((t, 3)),
        ang_vel=np.zeros((t, 3)),
        joint_rot6d=np.tile(rot.IDENTITY_6D, (t, nj, 1)),
        joint_local=np.zeros((t, nj, 3)),
        joint_global=joint_global,
    )
    return dv.Directive(track=track, mask=dv.keypoint_mask(nj, selected=np.nonzero(selected)[0]))


def rootcmd_to_directive(doc: dict, skel: SkeletonSpec) -> dv.Directive:
    """Rows of (speed, heading, facing, height) -> joystick directive."""
    rows = doc.get("rows")
    if not rows:
        raise SchemaError("root-command file has no rows")
    nj = skel.joint_count
    t = len(rows)
    track = dv.TargetTrack(
        root_pos=np.zeros((t, 3)),
        root_rot6d=np.tile(rot.IDENTITY_6D, (t, 1)),
        lin_vel=np.zeros((t, 3)),
        ang_vel=np.zeros((t, 3)),
        joint_rot6d=np.tile(rot.IDENTITY_6D, (t, nj, 1)),
        joint_local=np.zeros((t, nj, 3)),
        joint_global=np.zeros((t, nj, 3)),
    )
    for i, row in enumerate(rows):
        try:
            speed = float(row["speed"])
            heading = float(row["heading"])
            facing = float(row.get("facing", heading))
            height = float(row["height"])
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"malformed root-command row {i}: {e}") from e
        track.root_pos[i, 2] = height
        track.root_rot6d[i] = rot.matrix_to_sixd(rot.rotz(facing))
        track.lin_vel[i] = [speed * np.cos(heading), speed * np.sin(heading), 0.0]
    return dv.Directive(track=track, mask=dv.joystick_mask(nj))


def clip_to_directive(doc: dict, skel: SkeletonSpec) -> dv.Directive:
    clip = MotionClip.from_json_dict(doc, skel)
    return dv.Directive.from_clip(clip, dv.full_pose_mask(skel.joint_count))


def convert_modality(path, skel: SkeletonSpec, occlusion=None) -> dv.Directive:
    """Dispatch on the input file's schema field.

    occlusion: optional list of visible joint names applied on top of a
    keypoint file's own track list (intersection).
    """
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON: {e}") from e
    schema = doc.get("schema")
    if schema == KEYPOINTS_SCHEMA:
        if occlusion is not None:
            keep = set(occlusion)
            names = [n for n in doc["joint_names"] if n in keep]
            idx = [doc["joint_names"].index(n) for n in names]
            doc = dict(doc)
            doc["joint_names"] = names
            doc["frames"] = [[frame[i] for i in idx] for frame in doc["frames"]]
        directive = keypoints_to_directive(doc, skel)
    elif schema == ROOTCMD_SCHEMA:
        directive = rootcmd_to_directive(doc, skel)
    elif schema == CLIP_SCHEMA:
        directive = clip_to_directive(doc, skel)
    else:
        raise SchemaError(f"{path}: unknown input schema {schema!r}")
    return directive
