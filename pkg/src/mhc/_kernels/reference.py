"""Pure-numpy fallback for the hot numeric kernels.

The compiled module ``mhc._kernels._native`` implements the same functions
with identical operation order; either backend may be active (see
``mhc._kernels``).  All arrays are float64.  These functions assume valid
inputs — domain checks live in the public wrappers.

Rotational state is carried as scalar-first unit quaternions [w, x, y, z]:
composing with the identity quaternion is bitwise exact, which makes a
resting character a true fixed point of the integrator.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_SMALL = 1e-8


# ---------------------------------------------------------------------------
# rotation codecs
# ---------------------------------------------------------------------------


def rot6d_to_mat(r6):
    """Gram-Schmidt a (..., 6) array into (..., 3, 3) rotations.

    Columns 1,2 come from the two input triples, column 3 is their cross
    product.  Assumes non-degenerate triples.
    """
    r6 = np.asarray(r6, dtype=np.float64)
    a1 = r6[..., 0:3]
    a2 = r6[..., 3:6]
    b1 = a1 / np.linalg.norm(a1, axis=-1, keepdims=True)
    a2p = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    b2 = a2p / np.linalg.norm(a2p, axis=-1, keepdims=True)
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def rot6d_norms(r6):
    """Norms of the first triple and the projected second triple.

    Lets callers detect degenerate encodings before :func:`rot6d_to_mat`.
    """
    r6 = np.asarray(r6, dtype=np.float64)
    a1 = r6[..., 0:3]
    a2 = r6[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1)
    safe = np.where(n1 > 0.0, n1, 1.0)
    b1 = a1 / safe[..., None]
    a2p = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(a2p, axis=-1)
    return n1, n2


def quat_from_expmap(v):
    """Exponential-map (..., 3) vectors to unit quaternions (..., 4)."""
    v = np.asarray(v, dtype=np.float64)
    theta = np.linalg.norm(v, axis=-1)
    half = 0.5 * theta
    small = theta < _SMALL
    # sin(t/2)/t with series fallback; exactly 0.5 at t == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(small, 0.5 - theta * theta / 48.0, np.sin(half) / np.where(small, 1.0, theta))
    out = np.empty(v.shape[:-1] + (4,))
    out[..., 0] = np.cos(half)
    out[..., 1:] = v * s[..., None]
    return out


def quat_to_expmap(q):
    """Log map of unit quaternions to (..., 3) vectors with angle in [0, pi]."""
    q = np.asarray(q, dtype=np.float64)
    w = q[..., 0]
    vec = q[..., 1:]
    # Take the representative on the w >= 0 hemisphere for the short geodesic.
    flip = w < 0.0
    w = np.where(flip, -w, w)
    vec = np.where(flip[..., None], -vec, vec)
    s = np.linalg.norm(vec, axis=-1)
    angle = 2.0 * np.arctan2(s, w)
    small = s < _SMALL
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(small, 2.0 / np.where(w > 0.0, w, 1.0), angle / np.where(small, 1.0, s))
    return vec * scale[..., None]


def quat_mul(a, b):
    """Hamilton product of scalar-first quaternions.

    Terms are ordered so that conj(q) * q cancels exactly in floating
    point (the w-vector and cross products pair up adjacently).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    w1, x1, y1, z1 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    w2, x2, y2, z2 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 + y1 * w2 + z1 * x2 - x1 * z2,
            w1 * z2 + z1 * w2 + x1 * y2 - y1 * x2,
        ],
        axis=-1,
    )


def quat_conj(q):
    q = np.asarray(q, dtype=np.float64)
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def quat_to_mat(q):
    """Rotation matrices from unit quaternions."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1.0 - 2.0 * (yy + zz)
    m[..., 0, 1] = 2.0 * (xy - wz)
    m[..., 0, 2] = 2.0 * (xz + wy)
    m[..., 1, 0] = 2.0 * (xy + wz)
    m[..., 1, 1] = 1.0 - 2.0 * (xx + zz)
    m[..., 1, 2] = 2.0 * (yz - wx)
    m[..., 2, 0] = 2.0 * (xz - wy)
    m[..., 2, 1] = 2.0 * (yz + wx)
    m[..., 2, 2] = 1.0 - 2.0 * (xx + yy)
    return m


def quat_from_mat(m):
    """Shepperd's method, branch chosen per element by the largest pivot."""
    m = np.asarray(m, dtype=np.float64)
    batch = m.shape[:-2]
    flat = m.reshape((-1, 3, 3))
    out = np.empty((flat.shape[0], 4))
    for i in range(flat.shape[0]):
        r = flat[i]
        tr = r[0, 0] + r[1, 1] + r[2, 2]
        if tr > 0.0:
            s = np.sqrt(tr + 1.0) * 2.0
            out[i] = (0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s)
        elif r[0, 0] >= r[1, 1] and r[0, 0] >= r[2, 2]:
            s = np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
            out[i] = ((r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s)
        elif r[1, 1] >= r[2, 2]:
            s = np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
            out[i] = ((r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s)
        else:
            s = np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
            out[i] = ((r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s)
        if out[i, 0] < 0.0:
            out[i] = -out[i]
    return out.reshape(batch + (4,))


def expmap_to_mat(v):
    return quat_to_mat(quat_from_expmap(v))


def mat_to_expmap(m):
    return quat_to_expmap(quat_from_mat(m))


# ---------------------------------------------------------------------------
# forward kinematics
# ---------------------------------------------------------------------------


def fk_chain(parents, offsets, joint_mats):
    """Chain positions of every joint in the root frame.

    parents: (J,) int32, -1 meaning the root body.
    offsets: (J, 3) fixed translations from the parent joint.
    joint_mats: (..., J, 3, 3) local joint rotations.
    Returns (..., J, 3); the root body sits at the origin with identity
    orientation, so these equal root-relative coordinates.
    """
    joint_mats = np.asarray(joint_mats, dtype=np.float64)
    batch = joint_mats.shape[:-3]
    nj = offsets.shape[0]
    pos = np.zeros(batch + (nj, 3))
    rot = np.zeros(batch + (nj, 3, 3))
    for j in range(nj):
        p = parents[j]
        if p < 0:
            pos[..., j, :] = offsets[j]
            rot[..., j, :, :] = joint_mats[..., j, :, :]
        else:
            base_rot = rot[..., p, :, :]
            pos[..., j, :] = pos[..., p, :] + base_rot @ offsets[j]
            rot[..., j, :, :] = base_rot @ joint_mats[..., j, :, :]
    return pos


# ---------------------------------------------------------------------------
# simulator substep
# ---------------------------------------------------------------------------


def sim_substep(
    root_pos,
    root_quat,
    root_vel,
    root_angvel,
    joint_quat,
    joint_vel,
    action_quat,
    torque_acc,
    parents,
    offsets,
    foot_joints,
    foot_hips,
    kp,
    kd,
    tlim,
    scal,
):
    """One 1/sim_hz substep of the reduced humanoid model, batched over envs.

    All array arguments are modified in place.  ``scal`` is the packed
    float64 config vector (see simcore.config).  Returns 0, or 1 if any
    state magnitude exceeded the divergence bound.

    Closed-form root model:
      * each joint is an independent damped rotor driven by the PD torque
        tau = clip(kp * (setpoint - angle) - kd * w, +-limit) with the
        difference taken in the tangent space of the current rotation;
      * support height h_sup is the depth of the lowest body point below
        the root; the root rests on the ground when height <= h_sup;
      * per-foot support weight c_f = clip(1 - clearance/clear_ref, 0, 1)
        * clip((root_z - foot_z)/support_ref, 0, 1): planted feet well
        below the root give full support;
      * in contact, planar velocity is driven by stance-hip angular rates
        (a stance leg sweeping back propels the root forward); yaw is
        driven by stance-hip twist angle (planted feet steer like turned
        skis) plus a twist-rate term;
      * in contact, attitude feels a support-weighted righting spring
        toward upright plus a (1-support)-weighted toppling acceleration
        along tilt and center-of-mass offset, fading to zero once the body
        is horizontal;
      * ground contact is inelastic: downward root velocity is zeroed and
        planar velocity / tilt rate decay by ``friction`` per contact
        substep.
    """
    (
        dt,
        damping,
        inertia,
        gravity,
        ground,
        friction,
        k_drive,
        leg_len,
        k_yaw,
        k_yaw_drag,
        k_steer,
        k_att,
        k_att_damp,
        k_tip,
        com_ref,
        foot_clear_ref,
        support_ref,
        limit,
    ) = scal

    # --- joint dynamics -------------------------------------------------
    err = quat_to_expmap(quat_mul(quat_conj(joint_quat), action_quat))
    tau = np.clip(kp[:, None] * err - kd[:, None] * joint_vel, -tlim[:, None], tlim[:, None])
    torque_acc += tau
    joint_vel += dt * (tau - damping * joint_vel) / inertia
    joint_quat[...] = quat_mul(joint_quat, quat_from_expmap(dt * joint_vel))

    # --- body geometry --------------------------------------------------
    root_mat = quat_to_mat(root_quat)
    chain = fk_chain(parents, offsets, quat_to_mat(joint_quat))
    rel_world = np.einsum("eab,ejb->eja", root_mat, chain)
    rel_z = rel_world[..., 2]
    h_sup = np.maximum(0.0, -np.min(rel_z, axis=-1))

    root_z = root_pos[:, 2]
    in_contact = (root_z <= h_sup + ground + 1e-9).astype(np.float64)
    foot_z = root_z[:, None] + rel_z[:, foot_joints]
    clear = np.clip(1.0 - np.maximum(foot_z - ground, 0.0) / foot_clear_ref, 0.0, 1.0)
    under = np.clip((root_z[:, None] - foot_z) / support_ref, 0.0, 1.0)
    c_foot = clear * under * in_contact[:, None]
    c_support = np.mean(c_foot, axis=-1)

    # --- planar / yaw drive from stance-leg phase ------------------------
    hip_vel = joint_vel[:, foot_hips, :]  # hip parent frame == root frame
    hip_twist = quat_to_expmap(joint_quat[:, foot_hips, :])[..., 2]
    fwd = k_drive * leg_len * np.sum(c_foot * hip_vel[..., 1], axis=-1)
    lat = -k_drive * leg_len * np.sum(c_foot * hip_vel[..., 0], axis=-1)
    yaw_acc = -k_yaw * np.sum(c_foot * hip_vel[..., 2], axis=-1) - k_steer * np.sum(
        c_foot * hip_twist, axis=-1
    )

    heading = np.arctan2(root_mat[:, 1, 0], root_mat[:, 0, 0])
    ch, sh = np.cos(heading), np.sin(heading)
    root_vel[:, 0] += dt * in_contact * (ch * fwd - sh * lat)
    root_vel[:, 1] += dt * in_contact * (sh * fwd + ch * lat)
    root_vel[:, 2] -= dt * gravity

    # --- attitude -------------------------------------------------------
    up = root_mat[:, :, 2]
    com = np.mean(rel_world, axis=1)
    upright = np.maximum(up[:, 2], 0.0)
    tip_x = k_tip * upright * (-up[:, 1] - com[:, 1] / com_ref)
    tip_y = k_tip * upright * (up[:, 0] + com[:, 0] / com_ref)
    att_x = k_att * up[:, 1] - k_att_damp * root_angvel[:, 0]
    att_y = -k_att * up[:, 0] - k_att_damp * root_angvel[:, 1]
    root_angvel[:, 0] += dt * in_contact * (c_support * att_x + (1.0 - c_support) * tip_x)
    root_angvel[:, 1] += dt * in_contact * (c_support * att_y + (1.0 - c_support) * tip_y)
    root_angvel[:, 2] += dt * in_contact * (yaw_acc - k_yaw_drag * root_angvel[:, 2])

    # --- integrate ------------------------------------------------------
    root_pos += dt * root_vel
    root_quat[...] = quat_mul(quat_from_expmap(dt * root_angvel), root_quat)

    # --- inelastic ground contact ----------------------------------------
    floor = ground + h_sup
    clamped = root_pos[:, 2] < floor
    root_pos[:, 2] = np.where(clamped, floor, root_pos[:, 2])
    root_vel[:, 2] = np.where(clamped & (root_vel[:, 2] < 0.0), 0.0, root_vel[:, 2])
    fric = np.where(clamped, friction, 1.0)
    root_vel[:, 0] *= fric
    root_vel[:, 1] *= fric
    root_angvel[:, 0] *= fric
    root_angvel[:, 1] *= fric

    if (
        np.max(np.abs(root_pos)) > limit
        or np.max(np.abs(root_vel)) > limit
        or np.max(np.abs(joint_vel)) > limit
    ):
        return 1
    return 0
