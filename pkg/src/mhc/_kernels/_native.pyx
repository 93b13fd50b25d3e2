# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for the hot numeric kernels.

Same functions and operation order as mhc._kernels.reference; see that
module for the semantics.  Built with -ffp-contract=off so results are
bit-reproducible across machines with IEEE-754 doubles.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, fabs, sin, sqrt

cnp.import_array()

BACKEND = "native"

cdef double _SMALL = 1e-8


# ---------------------------------------------------------------------------
# scalar rotation helpers
# ---------------------------------------------------------------------------


cdef inline void c_quat_from_expmap(const double* v, double* q) noexcept nogil:
    cdef double theta = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    cdef double half = 0.5 * theta
    cdef double s
    if theta < _SMALL:
        s = 0.5 - theta * theta / 48.0
    else:
        s = sin(half) / theta
    q[0] = cos(half)
    q[1] = v[0] * s
    q[2] = v[1] * s
    q[3] = v[2] * s


cdef inline void c_quat_to_expmap(const double* q, double* out) noexcept nogil:
    cdef double w = q[0]
    cdef double x = q[1]
    cdef double y = q[2]
    cdef double z = q[3]
    if w < 0.0:
        w = -w
        x = -x
        y = -y
        z = -z
    cdef double s = sqrt(x * x + y * y + z * z)
    cdef double angle = 2.0 * atan2(s, w)
    cdef double scale
    if s < _SMALL:
        scale = 2.0 / w if w > 0.0 else 2.0
    else:
        scale = angle / s
    out[0] = x * scale
    out[1] = y * scale
    out[2] = z * scale


cdef inline void c_quat_mul(const double* a, const double* b, double* out) noexcept nogil:
    # term order pairs cancelling products (conj(q) * q is exactly scalar)
    cdef double w1 = a[0], x1 = a[1], y1 = a[2], z1 = a[3]
    cdef double w2 = b[0], x2 = b[1], y2 = b[2], z2 = b[3]
    out[0] = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2
    out[1] = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2
    out[2] = w1 * y2 + y1 * w2 + z1 * x2 - x1 * z2
    out[3] = w1 * z2 + z1 * w2 + x1 * y2 - y1 * x2


cdef inline void c_quat_to_mat(const double* q, double* m) noexcept nogil:
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    cdef double xx = x * x, yy = y * y, zz = z * z
    cdef double wx = w * x, wy = w * y, wz = w * z
    cdef double xy = x * y, xz = x * z, yz = y * z
    m[0] = 1.0 - 2.0 * (yy + zz)
    m[1] = 2.0 * (xy - wz)
    m[2] = 2.0 * (xz + wy)
    m[3] = 2.0 * (xy + wz)
    m[4] = 1.0 - 2.0 * (xx + zz)
    m[5] = 2.0 * (yz - wx)
    m[6] = 2.0 * (xz - wy)
    m[7] = 2.0 * (yz + wx)
    m[8] = 1.0 - 2.0 * (xx + yy)


cdef inline void c_quat_from_mat(const double* r, double* q) noexcept nogil:
    cdef double tr = r[0] + r[4] + r[8]
    cdef double s
    if tr > 0.0:
        s = sqrt(tr + 1.0) * 2.0
        q[0] = 0.25 * s
        q[1] = (r[7] - r[5]) / s
        q[2] = (r[2] - r[6]) / s
        q[3] = (r[3] - r[1]) / s
    elif r[0] >= r[4] and r[0] >= r[8]:
        s = sqrt(1.0 + r[0] - r[4] - r[8]) * 2.0
        q[0] = (r[7] - r[5]) / s
        q[1] = 0.25 * s
        q[2] = (r[1] + r[3]) / s
        q[3] = (r[2] + r[6]) / s
    elif r[4] >= r[8]:
        s = sqrt(1.0 + r[4] - r[0] - r[8]) * 2.0
        q[0] = (r[2] - r[6]) / s
        q[1] = (r[1] + r[3]) / s
        q[2] = 0.25 * s
        q[3] = (r[5] + r[7]) / s
    else:
        s = sqrt(1.0 + r[8] - r[0] - r[4]) * 2.0
        q[0] = (r[3] - r[1]) / s
        q[1] = (r[2] + r[6]) / s
        q[2] = (r[5] + r[7]) / s
        q[3] = 0.25 * s
    if q[0] < 0.0:
        q[0] = -q[0]
        q[1] = -q[1]
        q[2] = -q[2]
        q[3] = -q[3]


cdef inline void c_mat_vec(const double* m, const double* v, double* out) noexcept nogil:
    out[0] = m[0] * v[0] + m[1] * v[1] + m[2] * v[2]
    out[1] = m[3] * v[0] + m[4] * v[1] + m[5] * v[2]
    out[2] = m[6] * v[0] + m[7] * v[1] + m[8] * v[2]


cdef inline void c_mat_mul(const double* a, const double* b, double* out) noexcept nogil:
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = a[3 * i] * b[j] + a[3 * i + 1] * b[3 + j] + a[3 * i + 2] * b[6 + j]


cdef inline void c_rot6d_to_mat(const double* r6, double* m) noexcept nogil:
    cdef double n1 = sqrt(r6[0] * r6[0] + r6[1] * r6[1] + r6[2] * r6[2])
    cdef double b1x = r6[0] / n1, b1y = r6[1] / n1, b1z = r6[2] / n1
    cdef double dot = b1x * r6[3] + b1y * r6[4] + b1z * r6[5]
    cdef double a2x = r6[3] - dot * b1x
    cdef double a2y = r6[4] - dot * b1y
    cdef double a2z = r6[5] - dot * b1z
    cdef double n2 = sqrt(a2x * a2x + a2y * a2y + a2z * a2z)
    cdef double b2x = a2x / n2, b2y = a2y / n2, b2z = a2z / n2
    cdef double b3x = b1y * b2z - b1z * b2y
    cdef double b3y = b1z * b2x - b1x * b2z
    cdef double b3z = b1x * b2y - b1y * b2x
    m[0] = b1x; m[1] = b2x; m[2] = b3x
    m[3] = b1y; m[4] = b2y; m[5] = b3y
    m[6] = b1z; m[7] = b2z; m[8] = b3z


# ---------------------------------------------------------------------------
# batched python-facing wrappers
# ---------------------------------------------------------------------------


def rot6d_to_mat(r6):
    arr = np.ascontiguousarray(r6, dtype=np.float64)
    batch = arr.shape[:-1]
    flat = arr.reshape(-1, 6)
    out = np.empty((flat.shape[0], 3, 3))
    cdef const double[:, ::1] fv = flat
    cdef double[:, :, ::1] ov = out
    cdef Py_ssize_t i
    for i in range(fv.shape[0]):
        c_rot6d_to_mat(&fv[i, 0], &ov[i, 0, 0])
    return out.reshape(batch + (3, 3))


def rot6d_norms(r6):
    arr = np.ascontiguousarray(r6, dtype=np.float64)
    batch = arr.shape[:-1]
    flat = arr.reshape(-1, 6)
    n1 = np.empty(flat.shape[0])
    n2 = np.empty(flat.shape[0])
    cdef const double[:, ::1] fv = flat
    cdef double[::1] n1v = n1
    cdef double[::1] n2v = n2
    cdef Py_ssize_t i
    cdef double norm1, b1x, b1y, b1z, dot, ax, ay, az, safe
    for i in range(fv.shape[0]):
        norm1 = sqrt(fv[i, 0] * fv[i, 0] + fv[i, 1] * fv[i, 1] + fv[i, 2] * fv[i, 2])
        n1v[i] = norm1
        safe = norm1 if norm1 > 0.0 else 1.0
        b1x = fv[i, 0] / safe
        b1y = fv[i, 1] / safe
        b1z = fv[i, 2] / safe
        dot = b1x * fv[i, 3] + b1y * fv[i, 4] + b1z * fv[i, 5]
        ax = fv[i, 3] - dot * b1x
        ay = fv[i, 4] - dot * b1y
        az = fv[i, 5] - dot * b1z
        n2v[i] = sqrt(ax * ax + ay * ay + az * az)
    return n1.reshape(batch), n2.reshape(batch)


def quat_from_expmap(v):
    arr = np.ascontiguousarray(v, dtype=np.float64)
    batch = arr.shape[:-1]
    flat = arr.reshape(-1, 3)
    out = np.empty((flat.shape[0], 4))
    cdef const double[:, ::1] fv = flat
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i
    for i in range(fv.shape[0]):
        c_quat_from_expmap(&fv[i, 0], &ov[i, 0])
    return out.reshape(batch + (4,))


def quat_to_expmap(q):
    arr = np.ascontiguousarray(q, dtype=np.float64)
    batch = arr.shape[:-1]
    flat = arr.reshape(-1, 4)
    out = np.empty((flat.shape[0], 3))
    cdef const double[:, ::1] fv = flat
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i
    for i in range(fv.shape[0]):
        c_quat_to_expmap(&fv[i, 0], &ov[i, 0])
    return out.reshape(batch + (3,))


def quat_mul(a, b):
    aa = np.ascontiguousarray(a, dtype=np.float64)
    bb = np.ascontiguousarray(b, dtype=np.float64)
    if aa.shape != bb.shape:
        aa, bb = np.broadcast_arrays(aa, bb)
        aa = np.ascontiguousarray(aa)
        bb = np.ascontiguousarray(bb)
    batch = aa.shape[:-1]
    fa = aa.reshape(-1, 4)
    fb = bb.reshape(-1, 4)
    out = np.empty_like(fa)
    cdef const double[:, ::1] av = fa
    cdef const double[:, ::1] bv = fb
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i
    for i in range(av.shape[0]):
        c_quat_mul(&av[i, 0], &bv[i, 0], &ov[i, 0])
    return out.reshape(batch + (4,))


def quat_conj(q):
    out = np.array(q, dtype=np.float64, copy=True)
    out[..., 1:] *= -1.0
    return out


def quat_to_mat(q):
    arr = np.ascontiguousarray(q, dtype=np.float64)
    batch = arr.shape[:-1]
    flat = arr.reshape(-1, 4)
    out = np.empty((flat.shape[0], 3, 3))
    cdef const double[:, ::1] fv = flat
    cdef double[:, :, ::1] ov = out
    cdef Py_ssize_t i
    for i in range(fv.shape[0]):
        c_quat_to_mat(&fv[i, 0], &ov[i, 0, 0])
    return out.reshape(batch + (3, 3))


def quat_from_mat(m):
    arr = np.ascontiguousarray(m, dtype=np.float64)
    batch = arr.shape[:-2]
    flat = arr.reshape(-1, 3, 3)
    out = np.empty((flat.shape[0], 4))
    cdef const double[:, :, ::1] fv = flat
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i
    for i in range(fv.shape[0]):
        c_quat_from_mat(&fv[i, 0, 0], &ov[i, 0])
    return out.reshape(batch + (4,))


def expmap_to_mat(v):
    arr = np.ascontiguousarray(v, dtype=np.float64)
    batch = arr.shape[:-1]
    flat = arr.reshape(-1, 3)
    out = np.empty((flat.shape[0], 3, 3))
    cdef const double[:, ::1] fv = flat
    cdef double[:, :, ::1] ov = out
    cdef double q[4]
    cdef Py_ssize_t i
    for i in range(fv.shape[0]):
        c_quat_from_expmap(&fv[i, 0], q)
        c_quat_to_mat(q, &ov[i, 0, 0])
    return out.reshape(batch + (3, 3))


def mat_to_expmap(m):
    arr = np.ascontiguousarray(m, dtype=np.float64)
    batch = arr.shape[:-2]
    flat = arr.reshape(-1, 3, 3)
    out = np.empty((flat.shape[0], 3))
    cdef const double[:, :, ::1] fv = flat
    cdef double[:, ::1] ov = out
    cdef double q[4]
    cdef Py_ssize_t i
    for i in range(fv.shape[0]):
        c_quat_from_mat(&fv[i, 0, 0], q)
        c_quat_to_expmap(q, &ov[i, 0])
    return out.reshape(batch + (3,))


# ---------------------------------------------------------------------------
# forward kinematics
# ---------------------------------------------------------------------------


cdef void c_fk_chain(
    const int* parents,
    const double* offsets,
    const double* joint_mats,
    double* pos,
    double* rot,
    Py_ssize_t nj,
) noexcept nogil:
    cdef Py_ssize_t j
    cdef int p
    cdef const double* base_rot
    for j in range(nj):
        p = parents[j]
        if p < 0:
            pos[3 * j] = offsets[3 * j]
            pos[3 * j + 1] = offsets[3 * j + 1]
            pos[3 * j + 2] = offsets[3 * j + 2]
            rot[9 * j] = joint_mats[9 * j]
            rot[9 * j + 1] = joint_mats[9 * j + 1]
            rot[9 * j + 2] = joint_mats[9 * j + 2]
            rot[9 * j + 3] = joint_mats[9 * j + 3]
            rot[9 * j + 4] = joint_mats[9 * j + 4]
            rot[9 * j + 5] = joint_mats[9 * j + 5]
            rot[9 * j + 6] = joint_mats[9 * j + 6]
            rot[9 * j + 7] = joint_mats[9 * j + 7]
            rot[9 * j + 8] = joint_mats[9 * j + 8]
        else:
            base_rot = rot + 9 * p
            c_mat_vec(base_rot, offsets + 3 * j, pos + 3 * j)
            pos[3 * j] += pos[3 * p]
            pos[3 * j + 1] += pos[3 * p + 1]
            pos[3 * j + 2] += pos[3 * p + 2]
            c_mat_mul(base_rot, joint_mats + 9 * j, rot + 9 * j)


def fk_chain(parents, offsets, joint_mats):
    par = np.ascontiguousarray(parents, dtype=np.int32)
    off = np.ascontiguousarray(offsets, dtype=np.float64)
    mats = np.ascontiguousarray(joint_mats, dtype=np.float64)
    cdef Py_ssize_t nj = off.shape[0]
    batch = mats.shape[:-3]
    flat = mats.reshape(-1, nj, 3, 3)
    cdef Py_ssize_t n = flat.shape[0]
    pos = np.zeros((n, nj, 3))
    scratch = np.zeros((nj, 3, 3))
    cdef const int[::1] pv = par
    cdef const double[:, ::1] ov = off
    cdef const double[:, :, :, ::1] mv = flat
    cdef double[:, :, ::1] posv = pos
    cdef double[:, :, ::1] sv = scratch
    cdef Py_ssize_t i
    for i in range(n):
        c_fk_chain(&pv[0], &ov[0, 0], &mv[i, 0, 0, 0], &posv[i, 0, 0], &sv[0, 0, 0], nj)
    return pos.reshape(batch + (nj, 3))


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
    cdef double[:, ::1] rp = root_pos
    cdef double[:, ::1] rq = root_quat
    cdef double[:, ::1] rv = root_vel
    cdef double[:, ::1] rw = root_angvel
    cdef double[:, :, ::1] jq = joint_quat
    cdef double[:, :, ::1] jv = joint_vel
    cdef const double[:, :, ::1] aq = action_quat
    cdef double[:, :, ::1] ta = torque_acc
    cdef const int[::1] par = np.ascontiguousarray(parents, dtype=np.int32)
    cdef const double[:, ::1] off = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef const int[::1] feet = np.ascontiguousarray(foot_joints, dtype=np.int32)
    cdef const int[::1] hips = np.ascontiguousarray(foot_hips, dtype=np.int32)
    cdef const double[::1] kpv = np.ascontiguousarray(kp, dtype=np.float64)
    cdef const double[::1] kdv = np.ascontiguousarray(kd, dtype=np.float64)
    cdef const double[::1] tlv = np.ascontiguousarray(tlim, dtype=np.float64)
    cdef const double[::1] sc = np.ascontiguousarray(scal, dtype=np.float64)

    cdef double dt = sc[0], damping = sc[1], inertia = sc[2], gravity = sc[3]
    cdef double ground = sc[4], friction = sc[5], k_drive = sc[6], leg_len = sc[7]
    cdef double k_yaw = sc[8], k_yaw_drag = sc[9], k_steer = sc[10]
    cdef double k_att = sc[11], k_att_damp = sc[12]
    cdef double k_tip = sc[13], com_ref = sc[14], foot_clear_ref = sc[15]
    cdef double support_ref = sc[16], limit = sc[17]

    cdef Py_ssize_t n_env = rp.shape[0]
    cdef Py_ssize_t nj = off.shape[0]
    cdef Py_ssize_t n_feet = feet.shape[0]

    mats_buf = np.zeros((nj, 3, 3))
    chain_pos = np.zeros((nj, 3))
    chain_rot = np.zeros((nj, 3, 3))
    cdef double[:, :, ::1] mats = mats_buf
    cdef double[:, ::1] cpos = chain_pos
    cdef double[:, :, ::1] crot = chain_rot

    cdef double conj[4]
    cdef double rel[4]
    cdef double q_new[4]
    cdef double spin[4]
    cdef double err[3]
    cdef double root_mat[9]
    cdef double rel_world[3]
    cdef double dvel[3]
    cdef Py_ssize_t e, j, f
    cdef int status = 0
    cdef double h_sup, root_z, in_contact, c_support, c_f, clear, under
    cdef double fwd, lat, yaw_acc, steer, heading, ch, sh
    cdef double upx, upy, upz, comx, comy, upright
    cdef double tip_x, tip_y, att_x, att_y, rel_z_min, foot_z
    cdef double floor_z, t

    with nogil:
        for e in range(n_env):
            # --- joint dynamics -----------------------------------------
            for j in range(nj):
                conj[0] = jq[e, j, 0]
                conj[1] = -jq[e, j, 1]
                conj[2] = -jq[e, j, 2]
                conj[3] = -jq[e, j, 3]
                c_quat_mul(conj, &aq[e, j, 0], rel)
                c_quat_to_expmap(rel, err)
                for f in range(3):
                    t = kpv[j] * err[f] - kdv[j] * jv[e, j, f]
                    if t > tlv[j]:
                        t = tlv[j]
                    elif t < -tlv[j]:
                        t = -tlv[j]
                    ta[e, j, f] += t
                    jv[e, j, f] += dt * (t - damping * jv[e, j, f]) / inertia
                dvel[0] = dt * jv[e, j, 0]
                dvel[1] = dt * jv[e, j, 1]
                dvel[2] = dt * jv[e, j, 2]
                c_quat_from_expmap(dvel, spin)
                c_quat_mul(&jq[e, j, 0], spin, q_new)
                jq[e, j, 0] = q_new[0]
                jq[e, j, 1] = q_new[1]
                jq[e, j, 2] = q_new[2]
                jq[e, j, 3] = q_new[3]

            # --- body geometry --------------------------------------------
            c_quat_to_mat(&rq[e, 0], root_mat)
            for j in range(nj):
                c_quat_to_mat(&jq[e, j, 0], &mats[j, 0, 0])
            c_fk_chain(&par[0], &off[0, 0], &mats[0, 0, 0], &cpos[0, 0], &crot[0, 0, 0], nj)

            rel_z_min = 0.0
            comx = 0.0
            comy = 0.0
            for j in range(nj):
                c_mat_vec(root_mat, &cpos[j, 0], rel_world)
                # reuse chain_pos as world-frame relative positions
                cpos[j, 0] = rel_world[0]
                cpos[j, 1] = rel_world[1]
                cpos[j, 2] = rel_world[2]
                if j == 0:
                    rel_z_min = rel_world[2]
                elif rel_world[2] < rel_z_min:
                    rel_z_min = rel_world[2]
                comx += rel_world[0]
                comy += rel_world[1]
            comx /= nj
            comy /= nj
            h_sup = -rel_z_min
            if h_sup < 0.0:
                h_sup = 0.0

            root_z = rp[e, 2]
            in_contact = 1.0 if root_z <= h_sup + ground + 1e-9 else 0.0
            c_support = 0.0
            fwd = 0.0
            lat = 0.0
            yaw_acc = 0.0
            steer = 0.0
            for f in range(n_feet):
                foot_z = root_z + cpos[feet[f], 2]
                clear = foot_z - ground
                if clear < 0.0:
                    clear = 0.0
                clear = 1.0 - clear / foot_clear_ref
                if clear < 0.0:
                    clear = 0.0
                elif clear > 1.0:
                    clear = 1.0
                under = (root_z - foot_z) / support_ref
                if under < 0.0:
                    under = 0.0
                elif under > 1.0:
                    under = 1.0
                c_f = clear * under * in_contact
                c_support += c_f
                fwd += c_f * jv[e, hips[f], 1]
                lat += c_f * jv[e, hips[f], 0]
                yaw_acc += c_f * jv[e, hips[f], 2]
                c_quat_to_expmap(&jq[e, hips[f], 0], dvel)
                steer += c_f * dvel[2]
            c_support /= n_feet
            fwd = k_drive * leg_len * fwd
            lat = -k_drive * leg_len * lat
            yaw_acc = -k_yaw * yaw_acc - k_steer * steer

            heading = atan2(root_mat[3], root_mat[0])
            ch = cos(heading)
            sh = sin(heading)
            rv[e, 0] += dt * in_contact * (ch * fwd - sh * lat)
            rv[e, 1] += dt * in_contact * (sh * fwd + ch * lat)
            rv[e, 2] -= dt * gravity

            upx = root_mat[2]
            upy = root_mat[5]
            upz = root_mat[8]
            upright = upz if upz > 0.0 else 0.0
            tip_x = k_tip * upright * (-upy - comy / com_ref)
            tip_y = k_tip * upright * (upx + comx / com_ref)
            att_x = k_att * upy - k_att_damp * rw[e, 0]
            att_y = -k_att * upx - k_att_damp * rw[e, 1]
            rw[e, 0] += dt * in_contact * (c_support * att_x + (1.0 - c_support) * tip_x)
            rw[e, 1] += dt * in_contact * (c_support * att_y + (1.0 - c_support) * tip_y)
            rw[e, 2] += dt * in_contact * (yaw_acc - k_yaw_drag * rw[e, 2])

            rp[e, 0] += dt * rv[e, 0]
            rp[e, 1] += dt * rv[e, 1]
            rp[e, 2] += dt * rv[e, 2]
            dvel[0] = dt * rw[e, 0]
            dvel[1] = dt * rw[e, 1]
            dvel[2] = dt * rw[e, 2]
            c_quat_from_expmap(dvel, spin)
            c_quat_mul(spin, &rq[e, 0], q_new)
            rq[e, 0] = q_new[0]
            rq[e, 1] = q_new[1]
            rq[e, 2] = q_new[2]
            rq[e, 3] = q_new[3]

            floor_z = ground + h_sup
            if rp[e, 2] < floor_z:
                rp[e, 2] = floor_z
                if rv[e, 2] < 0.0:
                    rv[e, 2] = 0.0
                rv[e, 0] *= friction
                rv[e, 1] *= friction
                rw[e, 0] *= friction
                rw[e, 1] *= friction

            for f in range(3):
                if fabs(rp[e, f]) > limit or fabs(rv[e, f]) > limit:
                    status = 1
            for j in range(nj):
                for f in range(3):
                    if fabs(jv[e, j, f]) > limit:
                        status = 1
    return status
