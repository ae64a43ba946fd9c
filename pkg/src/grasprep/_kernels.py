"""Compiled numerical kernels for tracking, collision, and grasp rollouts.

Everything here operates on plain float64/int64 arrays packed by the public
modules. The Euler conversion entries mirror se3.py exactly (pinned by test);
keep the two in lockstep when touching either.

Shape packing (kind, data[16]):
  0 sphere     data[0:3] center, data[3] radius
  1 capsule    data[0:3] p0, data[3:6] p1, data[6] radius
  2 box        data[0:3] half extents, data[3:12] rotation row-major,
               data[12:15] translation
  3 half-space data[0:3] unit outward normal n, data[3] offset o,
               solid = {x : n.x <= o}

Joint kinds: 0 revolute, 1 prismatic.
Rollout status: 0 completed, 1 IK failure, 2 collision.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

F_MAX = 5  # hand model has at most five fingertips

JIT_OPTS = dict(cache=True, nogil=True, fastmath=False)

STATUS_OK = 0
STATUS_IK = 1
STATUS_COLLISION = 2

KIND_SPHERE = 0
KIND_CAPSULE = 1
KIND_BOX = 2
KIND_HALFSPACE = 3


# ---------------------------------------------------------------------------
# small linear algebra


@njit(**JIT_OPTS)
def _mat3_mul(a, b):
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            out[i, j] = a[i, 0] * b[0, j] + a[i, 1] * b[1, j] + a[i, 2] * b[2, j]
    return out


@njit(**JIT_OPTS)
def _mat3_vec(a, v):
    out = np.empty(3)
    for i in range(3):
        out[i] = a[i, 0] * v[0] + a[i, 1] * v[1] + a[i, 2] * v[2]
    return out


@njit(**JIT_OPTS)
def _mat3_t_vec(a, v):
    out = np.empty(3)
    for i in range(3):
        out[i] = a[0, i] * v[0] + a[1, i] * v[1] + a[2, i] * v[2]
    return out


@njit(**JIT_OPTS)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(**JIT_OPTS)
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(**JIT_OPTS)
def _norm(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


@njit(**JIT_OPTS)
def _solve6_spd(a, b):
    # Cholesky solve; a is J J^T + lambda^2 I, always SPD.
    l = np.zeros((6, 6))
    for i in range(6):
        for j in range(i + 1):
            s = a[i, j]
            for k in range(j):
                s -= l[i, k] * l[j, k]
            if i == j:
                l[i, i] = math.sqrt(max(s, 1e-300))
            else:
                l[i, j] = s / l[j, j]
    y = np.empty(6)
    for i in range(6):
        s = b[i]
        for k in range(i):
            s -= l[i, k] * y[k]
        y[i] = s / l[i, i]
    x = np.empty(6)
    for i in range(5, -1, -1):
        s = y[i]
        for k in range(i + 1, 6):
            s -= l[k, i] * x[k]
        x[i] = s / l[i, i]
    return x


# ---------------------------------------------------------------------------
# rotations


@njit(**JIT_OPTS)
def euler_to_rot(roll, pitch, yaw):
    # Intrinsic X-Y-Z; entries identical to se3.euler_to_matrix.
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    out = np.empty((3, 3))
    out[0, 0] = cp * cy
    out[0, 1] = -cp * sy
    out[0, 2] = sp
    out[1, 0] = cr * sy + sr * sp * cy
    out[1, 1] = cr * cy - sr * sp * sy
    out[1, 2] = -sr * cp
    out[2, 0] = sr * sy - cr * sp * cy
    out[2, 1] = sr * cy + cr * sp * sy
    out[2, 2] = cr * cp
    return out


@njit(**JIT_OPTS)
def axis_angle_rot(axis, angle):
    # Rodrigues formula for a unit axis.
    c, s = math.cos(angle), math.sin(angle)
    t = 1.0 - c
    x, y, z = axis[0], axis[1], axis[2]
    out = np.empty((3, 3))
    out[0, 0] = t * x * x + c
    out[0, 1] = t * x * y - s * z
    out[0, 2] = t * x * z + s * y
    out[1, 0] = t * x * y + s * z
    out[1, 1] = t * y * y + c
    out[1, 2] = t * y * z - s * x
    out[2, 0] = t * x * z - s * y
    out[2, 1] = t * y * z + s * x
    out[2, 2] = t * z * z + c
    return out


@njit(**JIT_OPTS)
def rot_to_rotvec(r):
    # Log map, robust near 0 and pi.
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    c = 0.5 * (tr - 1.0)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    angle = math.acos(c)
    out = np.empty(3)
    vx = 0.5 * (r[2, 1] - r[1, 2])
    vy = 0.5 * (r[0, 2] - r[2, 0])
    vz = 0.5 * (r[1, 0] - r[0, 1])
    if angle < 1e-7:
        out[0], out[1], out[2] = vx, vy, vz
        return out
    if angle > math.pi - 1e-6:
        # near pi the skew part vanishes; recover the axis from the
        # symmetric part via a a^T = (M - c I) / (1 - c), M = (R + R^T)/2
        denom = 1.0 - c
        axis = np.empty(3)
        k = 0
        if r[1, 1] > r[k, k]:
            k = 1
        if r[2, 2] > r[k, k]:
            k = 2
        axis[k] = math.sqrt(max(0.0, (r[k, k] - c) / denom))
        for j in range(3):
            if j != k:
                axis[j] = 0.5 * (r[k, j] + r[j, k]) / denom / axis[k]
        # at exactly pi both signs encode the same rotation; align with the
        # skew part when it still carries sign information
        if axis[0] * vx + axis[1] * vy + axis[2] * vz < 0.0:
            axis = -axis
        n = _norm(axis)
        out[0] = angle * axis[0] / n
        out[1] = angle * axis[1] / n
        out[2] = angle * axis[2] / n
        return out
    scale = angle / math.sin(angle)
    out[0] = vx * scale
    out[1] = vy * scale
    out[2] = vz * scale
    return out


# ---------------------------------------------------------------------------
# forward kinematics / jacobian / IK


@njit(**JIT_OPTS)
def fk_chain(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
             z_world, p_axis, p_org):
    """Walk the chain; fill per-joint world axis, axis point, and link origin.

    Returns the end-effector world pose (rotation, translation).
    """
    nj = jtypes.shape[0]
    r = np.eye(3)
    t = np.zeros(3)
    for j in range(nj):
        t = t + _mat3_vec(r, org_tr[j])
        r = _mat3_mul(r, org_rot[j])
        zw = _mat3_vec(r, axes[j])
        z_world[j, 0], z_world[j, 1], z_world[j, 2] = zw[0], zw[1], zw[2]
        p_axis[j, 0], p_axis[j, 1], p_axis[j, 2] = t[0], t[1], t[2]
        if jtypes[j] == 0:
            r = _mat3_mul(r, axis_angle_rot(axes[j], q[j]))
        else:
            t = t + zw * q[j]
        p_org[j, 0], p_org[j, 1], p_org[j, 2] = t[0], t[1], t[2]
    ee_t = t + _mat3_vec(r, ee_tr)
    ee_r = _mat3_mul(r, ee_rot)
    return ee_r, ee_t


@njit(**JIT_OPTS)
def fk_pose(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q):
    nj = jtypes.shape[0]
    z_world = np.empty((nj, 3))
    p_axis = np.empty((nj, 3))
    p_org = np.empty((nj, 3))
    return fk_chain(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
                    z_world, p_axis, p_org)


@njit(**JIT_OPTS)
def point_jacobian(jtypes, z_world, p_axis, point, upto, jac):
    """Geometric Jacobian of a world point rigidly attached past joint `upto`.

    Columns for joints > upto are zero. jac is a (6, nj) output buffer;
    rows 0..2 linear, rows 3..5 angular.
    """
    nj = jtypes.shape[0]
    for j in range(nj):
        if j > upto:
            for i in range(6):
                jac[i, j] = 0.0
            continue
        zx, zy, zz = z_world[j, 0], z_world[j, 1], z_world[j, 2]
        if jtypes[j] == 0:
            dx = point[0] - p_axis[j, 0]
            dy = point[1] - p_axis[j, 1]
            dz = point[2] - p_axis[j, 2]
            jac[0, j] = zy * dz - zz * dy
            jac[1, j] = zz * dx - zx * dz
            jac[2, j] = zx * dy - zy * dx
            jac[3, j] = zx
            jac[4, j] = zy
            jac[5, j] = zz
        else:
            jac[0, j] = zx
            jac[1, j] = zy
            jac[2, j] = zz
            jac[3, j] = 0.0
            jac[4, j] = 0.0
            jac[5, j] = 0.0


@njit(**JIT_OPTS)
def ee_jacobian(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q):
    nj = jtypes.shape[0]
    z_world = np.empty((nj, 3))
    p_axis = np.empty((nj, 3))
    p_org = np.empty((nj, 3))
    ee_r, ee_t = fk_chain(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
                          z_world, p_axis, p_org)
    jac = np.empty((6, nj))
    point_jacobian(jtypes, z_world, p_axis, ee_t, nj - 1, jac)
    return jac


@njit(**JIT_OPTS)
def ik_solve(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, limits, reach_bound,
             target_rot, target_tr, q_seed,
             damping, step_clamp, max_iters, tol_pos, tol_rot):
    """Damped least-squares IK. Returns (ok, q, pos_err, rot_err, iters)."""
    nj = jtypes.shape[0]
    q = q_seed.copy()
    z_world = np.empty((nj, 3))
    p_axis = np.empty((nj, 3))
    p_org = np.empty((nj, 3))
    jac = np.empty((6, nj))
    if _norm(target_tr) > reach_bound:
        ee_r, ee_t = fk_chain(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
                              z_world, p_axis, p_org)
        e_rot = rot_to_rotvec(_mat3_mul(target_rot, ee_r.T.copy()))
        return False, q, _norm(target_tr - ee_t), _norm(e_rot), 0
    pos_err = 0.0
    rot_err = 0.0
    for it in range(max_iters + 1):
        ee_r, ee_t = fk_chain(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
                              z_world, p_axis, p_org)
        e = np.empty(6)
        e[0] = target_tr[0] - ee_t[0]
        e[1] = target_tr[1] - ee_t[1]
        e[2] = target_tr[2] - ee_t[2]
        e_rot = rot_to_rotvec(_mat3_mul(target_rot, ee_r.T.copy()))
        e[3], e[4], e[5] = e_rot[0], e_rot[1], e_rot[2]
        pos_err = math.sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2])
        rot_err = _norm(e_rot)
        if pos_err <= tol_pos and rot_err <= tol_rot:
            return True, q, pos_err, rot_err, it
        if it == max_iters:
            break
        point_jacobian(jtypes, z_world, p_axis, ee_t, nj - 1, jac)
        a = np.empty((6, 6))
        for i in range(6):
            for k in range(i + 1):
                s = 0.0
                for j in range(nj):
                    s += jac[i, j] * jac[k, j]
                a[i, k] = s
                a[k, i] = s
            a[i, i] += damping * damping
        y = _solve6_spd(a, e)
        biggest = 0.0
        for j in range(nj):
            dq = 0.0
            for i in range(6):
                dq += jac[i, j] * y[i]
            if dq > step_clamp:
                dq = step_clamp
            elif dq < -step_clamp:
                dq = -step_clamp
            nq = q[j] + dq
            if nq < limits[j, 0]:
                nq = limits[j, 0]
            elif nq > limits[j, 1]:
                nq = limits[j, 1]
            moved = abs(nq - q[j])
            if moved > biggest:
                biggest = moved
            q[j] = nq
        if biggest < 1e-13:
            break  # pinned by limits or a singular direction; no progress
    return False, q, pos_err, rot_err, max_iters


@njit(**JIT_OPTS)
def gravity_torques(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
                    masses, gravity, payload_mass):
    """Joint torques balancing gravity: tau = dU/dq, U the potential energy.

    Link masses sit at each link frame origin; the payload sits at the
    end-effector origin.
    """
    nj = jtypes.shape[0]
    z_world = np.empty((nj, 3))
    p_axis = np.empty((nj, 3))
    p_org = np.empty((nj, 3))
    ee_r, ee_t = fk_chain(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
                          z_world, p_axis, p_org)
    tau = np.zeros(nj)
    jac = np.empty((6, nj))
    for link in range(nj):
        if masses[link] == 0.0:
            continue
        point_jacobian(jtypes, z_world, p_axis, p_org[link], link, jac)
        for j in range(link + 1):
            tau[j] -= masses[link] * (gravity[0] * jac[0, j]
                                      + gravity[1] * jac[1, j]
                                      + gravity[2] * jac[2, j])
    if payload_mass != 0.0:
        point_jacobian(jtypes, z_world, p_axis, ee_t, nj - 1, jac)
        for j in range(nj):
            tau[j] -= payload_mass * (gravity[0] * jac[0, j]
                                      + gravity[1] * jac[1, j]
                                      + gravity[2] * jac[2, j])
    return tau


# ---------------------------------------------------------------------------
# primitive shapes


@njit(**JIT_OPTS)
def shape_to_world(kind, data, rot, tr):
    """Re-express a local-frame shape in the world frame."""
    out = data.copy()
    if kind == KIND_SPHERE:
        c = _mat3_vec(rot, data[0:3]) + tr
        out[0], out[1], out[2] = c[0], c[1], c[2]
    elif kind == KIND_CAPSULE:
        p0 = _mat3_vec(rot, data[0:3]) + tr
        p1 = _mat3_vec(rot, data[3:6]) + tr
        out[0], out[1], out[2] = p0[0], p0[1], p0[2]
        out[3], out[4], out[5] = p1[0], p1[1], p1[2]
    elif kind == KIND_BOX:
        rb = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                rb[i, j] = data[3 + 3 * i + j]
        rw = _mat3_mul(rot, rb)
        tw = _mat3_vec(rot, data[12:15]) + tr
        for i in range(3):
            for j in range(3):
                out[3 + 3 * i + j] = rw[i, j]
        out[12], out[13], out[14] = tw[0], tw[1], tw[2]
    else:  # half-space
        n = _mat3_vec(rot, data[0:3])
        out[0], out[1], out[2] = n[0], n[1], n[2]
        out[3] = data[3] + _dot(n, tr)
    return out


@njit(**JIT_OPTS)
def _closest_on_segment(p, a, b):
    ab = b - a
    denom = _dot(ab, ab)
    if denom < 1e-30:
        return a.copy()
    t = _dot(p - a, ab) / denom
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return a + ab * t


@njit(**JIT_OPTS)
def _segment_segment(p1, q1, p2, q2):
    """Closest points between two segments (Ericson, Real-Time Collision
    Detection 5.1.9). Returns (point_on_1, point_on_2)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    if a < 1e-30 and e < 1e-30:
        return p1.copy(), p2.copy()
    if a < 1e-30:
        s = 0.0
        t = min(1.0, max(0.0, f / e))
    else:
        c = _dot(d1, r)
        if e < 1e-30:
            t = 0.0
            s = min(1.0, max(0.0, -c / a))
        else:
            b = _dot(d1, d2)
            denom = a * e - b * b
            if denom > 1e-30:
                s = min(1.0, max(0.0, (b * f - c * e) / denom))
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    return p1 + d1 * s, p2 + d2 * t


@njit(**JIT_OPTS)
def _box_point_info(point, data):
    """Signed distance from a world point to a world-frame box, plus the
    closest (or deepest-face) surface point and outward normal in world."""
    h = data[0:3]
    rb = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            rb[i, j] = data[3 + 3 * i + j]
    tb = data[12:15]
    local = _mat3_t_vec(rb, point - tb)
    outside = False
    clamped = np.empty(3)
    for i in range(3):
        v = local[i]
        if v < -h[i]:
            v = -h[i]
            outside = True
        elif v > h[i]:
            v = h[i]
            outside = True
        clamped[i] = v
    if outside:
        diff = local - clamped
        d = _norm(diff)
        n_local = diff / d
        surface = clamped
    else:
        # inside: closest face
        best = 0
        best_gap = h[0] - abs(local[0])
        for i in range(1, 3):
            gap = h[i] - abs(local[i])
            if gap < best_gap:
                best_gap = gap
                best = i
        d = -best_gap
        n_local = np.zeros(3)
        n_local[best] = 1.0 if local[best] >= 0.0 else -1.0
        surface = local.copy()
        surface[best] = h[best] if local[best] >= 0.0 else -h[best]
    world_point = _mat3_vec(rb, surface) + tb
    world_normal = _mat3_vec(rb, n_local)
    return d, world_point, world_normal


@njit(**JIT_OPTS)
def _box_sdf_point(point, data):
    d, _, _ = _box_point_info(point, data)
    return d


@njit(**JIT_OPTS)
def _box_corners(data, out):
    h = data[0:3]
    rb = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            rb[i, j] = data[3 + 3 * i + j]
    tb = data[12:15]
    idx = 0
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                local = np.empty(3)
                local[0] = sx * h[0]
                local[1] = sy * h[1]
                local[2] = sz * h[2]
                w = _mat3_vec(rb, local) + tb
                out[idx, 0], out[idx, 1], out[idx, 2] = w[0], w[1], w[2]
                idx += 1


@njit(**JIT_OPTS)
def _box_support(data, direction):
    rb = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            rb[i, j] = data[3 + 3 * i + j]
    h = data[0:3]
    tb = data[12:15]
    local_dir = _mat3_t_vec(rb, direction)
    local = np.empty(3)
    for i in range(3):
        local[i] = h[i] if local_dir[i] >= 0.0 else -h[i]
    return _mat3_vec(rb, local) + tb


_BOX_EDGES = np.array([
    # pairs of corner indices in the sx,sy,sz enumeration order of _box_corners
    [0, 1], [2, 3], [4, 5], [6, 7],   # edges along z
    [0, 2], [1, 3], [4, 6], [5, 7],   # edges along y
    [0, 4], [1, 5], [2, 6], [3, 7],   # edges along x
], dtype=np.int64)


@njit(**JIT_OPTS)
def _dist_box_box(data_a, data_b):
    """Signed distance and witness points between two world-frame boxes.

    Separated: exact via vertex-box and edge-edge feature enumeration.
    Overlapping: depth from the minimum-overlap separating-axis candidate.
    """
    ra = np.empty((3, 3))
    rb = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            ra[i, j] = data_a[3 + 3 * i + j]
            rb[i, j] = data_b[3 + 3 * i + j]
    ha = data_a[0:3]
    hb = data_b[0:3]
    ca = data_a[12:15]
    cb = data_b[12:15]
    d = cb - ca

    separated = False
    best_overlap = 1e300
    best_axis = np.zeros(3)
    for src in range(15):
        axis = np.zeros(3)
        if src < 3:
            axis[0], axis[1], axis[2] = ra[0, src], ra[1, src], ra[2, src]
        elif src < 6:
            k = src - 3
            axis[0], axis[1], axis[2] = rb[0, k], rb[1, k], rb[2, k]
        else:
            i = (src - 6) // 3
            j = (src - 6) % 3
            ea = np.empty(3)
            eb = np.empty(3)
            for m in range(3):
                ea[m] = ra[m, i]
                eb[m] = rb[m, j]
            axis = _cross(ea, eb)
            n = _norm(axis)
            if n < 1e-10:
                continue
            axis = axis / n
        proj_a = 0.0
        proj_b = 0.0
        for k in range(3):
            col_a = abs(axis[0] * ra[0, k] + axis[1] * ra[1, k] + axis[2] * ra[2, k])
            col_b = abs(axis[0] * rb[0, k] + axis[1] * rb[1, k] + axis[2] * rb[2, k])
            proj_a += ha[k] * col_a
            proj_b += hb[k] * col_b
        sep = abs(_dot(axis, d)) - proj_a - proj_b
        if sep > 0.0:
            separated = True
            break
        if -sep < best_overlap:
            best_overlap = -sep
            if _dot(axis, d) < 0.0:
                best_axis = -axis
            else:
                best_axis = axis.copy()

    if not separated:
        pa = _box_support(data_a, best_axis)
        pb = _box_support(data_b, -best_axis)
        return -best_overlap, pa, pb

    corners_a = np.empty((8, 3))
    corners_b = np.empty((8, 3))
    _box_corners(data_a, corners_a)
    _box_corners(data_b, corners_b)
    best = 1e300
    wa = np.zeros(3)
    wb = np.zeros(3)
    for i in range(8):
        dist, pt, _ = _box_point_info(corners_a[i], data_b)
        if dist < best:
            best = dist
            wa = corners_a[i].copy()
            wb = pt
        dist, pt, _ = _box_point_info(corners_b[i], data_a)
        if dist < best:
            best = dist
            wb = corners_b[i].copy()
            wa = pt
    for i in range(12):
        a0 = corners_a[_BOX_EDGES[i, 0]]
        a1 = corners_a[_BOX_EDGES[i, 1]]
        for j in range(12):
            b0 = corners_b[_BOX_EDGES[j, 0]]
            b1 = corners_b[_BOX_EDGES[j, 1]]
            pa, pb = _segment_segment(a0, a1, b0, b1)
            dist = _norm(pa - pb)
            if dist < best:
                best = dist
                wa = pa
                wb = pb
    return best, wa, wb


@njit(**JIT_OPTS)
def _dist_segment_box(p0, p1, data):
    """Min signed box-SDF along a segment via ternary search (SDF of a convex
    solid is convex, so the 1-D restriction is too). Returns (d, t*)."""
    lo = 0.0
    hi = 1.0
    for _ in range(64):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        f1 = _box_sdf_point(p0 + (p1 - p0) * m1, data)
        f2 = _box_sdf_point(p0 + (p1 - p0) * m2, data)
        if f1 <= f2:
            hi = m2
        else:
            lo = m1
    t = 0.5 * (lo + hi)
    f_mid = _box_sdf_point(p0 + (p1 - p0) * t, data)
    f0 = _box_sdf_point(p0, data)
    f1 = _box_sdf_point(p1, data)
    if f0 <= f_mid and f0 <= f1:
        return f0, 0.0
    if f1 <= f_mid:
        return f1, 1.0
    return f_mid, t


@njit(**JIT_OPTS)
def _dist_ordered(kind_a, data_a, kind_b, data_b):
    # requires kind_a <= kind_b
    if kind_a == KIND_SPHERE:
        ca = data_a[0:3].copy()
        ra = data_a[3]
        if kind_b == KIND_SPHERE:
            cb = data_b[0:3].copy()
            rb = data_b[3]
            axis = cb - ca
            n = _norm(axis)
            if n < 1e-12:
                axis = np.zeros(3)
                axis[2] = 1.0
                n = 0.0
            else:
                axis = axis / n
            d = n - ra - rb
            return d, ca + axis * ra, cb - axis * rb
        if kind_b == KIND_CAPSULE:
            nearest = _closest_on_segment(ca, data_b[0:3].copy(), data_b[3:6].copy())
            rb = data_b[6]
            axis = nearest - ca
            n = _norm(axis)
            if n < 1e-12:
                axis = np.zeros(3)
                axis[2] = 1.0
                n = 0.0
            else:
                axis = axis / n
            d = n - ra - rb
            return d, ca + axis * ra, nearest - axis * rb
        if kind_b == KIND_BOX:
            dp, surface, normal = _box_point_info(ca, data_b)
            d = dp - ra
            return d, ca - normal * ra, surface
        # half-space
        n = data_b[0:3].copy()
        d = _dot(n, ca) - data_b[3] - ra
        return d, ca - n * ra, ca - n * (_dot(n, ca) - data_b[3])

    if kind_a == KIND_CAPSULE:
        p0 = data_a[0:3].copy()
        p1 = data_a[3:6].copy()
        ra = data_a[6]
        if kind_b == KIND_CAPSULE:
            q0 = data_b[0:3].copy()
            q1 = data_b[3:6].copy()
            rb = data_b[6]
            pa, pb = _segment_segment(p0, p1, q0, q1)
            axis = pb - pa
            n = _norm(axis)
            if n < 1e-12:
                axis = np.zeros(3)
                axis[2] = 1.0
            else:
                axis = axis / n
            d = n - ra - rb
            return d, pa + axis * ra, pb - axis * rb
        if kind_b == KIND_BOX:
            d_seg, t = _dist_segment_box(p0, p1, data_b)
            pt = p0 + (p1 - p0) * t
            dp, surface, normal = _box_point_info(pt, data_b)
            d = dp - ra
            return d, pt - normal * ra, surface
        # half-space
        n = data_b[0:3].copy()
        d0 = _dot(n, p0)
        d1 = _dot(n, p1)
        pt = p0 if d0 <= d1 else p1
        dmin = d0 if d0 <= d1 else d1
        d = dmin - data_b[3] - ra
        return d, pt - n * ra, pt - n * (dmin - data_b[3])

    if kind_a == KIND_BOX:
        if kind_b == KIND_BOX:
            return _dist_box_box(data_a, data_b)
        # half-space: deepest corner decides
        n = data_b[0:3].copy()
        corners = np.empty((8, 3))
        _box_corners(data_a, corners)
        best = 1e300
        wa = np.zeros(3)
        for i in range(8):
            depth = _dot(n, corners[i])
            if depth < best:
                best = depth
                wa = corners[i].copy()
        d = best - data_b[3]
        return d, wa, wa - n * d

    # half-space vs half-space: degenerate pairing, effectively unused;
    # disjoint only when the normals oppose with a gap.
    na = data_a[0:3].copy()
    nb = data_b[0:3].copy()
    if _dot(na, nb) < -1.0 + 1e-9:
        gap = -data_b[3] - data_a[3]
        anchor = na * data_a[3]
        return gap, anchor, anchor - na * gap
    return -1e300, np.zeros(3), np.zeros(3)


@njit(**JIT_OPTS)
def dist_shapes(kind_a, data_a, kind_b, data_b):
    """Signed distance + witness points between two world-frame shapes.

    Negative iff penetrating; witnesses are the closest surface points (or
    deepest for penetration). Symmetric in its arguments by construction.
    """
    if kind_a > kind_b:
        d, pb, pa = _dist_ordered(kind_b, data_b, kind_a, data_a)
        return d, pa, pb
    return _dist_ordered(kind_a, data_a, kind_b, data_b)


@njit(**JIT_OPTS)
def sphere_shape_contact(center, radius, kind_b, data_b):
    """Distance from a sphere to a shape plus the witness point and outward
    normal on the shape. Used for fingertip contact queries."""
    if kind_b == KIND_SPHERE:
        cb = data_b[0:3].copy()
        rb = data_b[3]
        axis = center - cb
        n = _norm(axis)
        if n < 1e-12:
            axis = np.zeros(3)
            axis[2] = 1.0
        else:
            axis = axis / n
        return n - rb - radius, cb + axis * rb, axis
    if kind_b == KIND_CAPSULE:
        nearest = _closest_on_segment(center, data_b[0:3].copy(), data_b[3:6].copy())
        rb = data_b[6]
        axis = center - nearest
        n = _norm(axis)
        if n < 1e-12:
            axis = np.zeros(3)
            axis[2] = 1.0
        else:
            axis = axis / n
        return n - rb - radius, nearest + axis * rb, axis
    if kind_b == KIND_BOX:
        dp, surface, normal = _box_point_info(center, data_b)
        return dp - radius, surface, normal
    n = data_b[0:3].copy()
    dp = _dot(n, center) - data_b[3]
    return dp - radius, center - n * dp, n.copy()


@njit(**JIT_OPTS)
def shape_bound(kind, data):
    """Conservative bounding sphere (center, radius) of a packed shape."""
    c = np.zeros(3)
    if kind == KIND_SPHERE:
        c[0], c[1], c[2] = data[0], data[1], data[2]
        return c, data[3]
    if kind == KIND_CAPSULE:
        for i in range(3):
            c[i] = 0.5 * (data[i] + data[3 + i])
        half = 0.5 * math.sqrt((data[0] - data[3]) ** 2
                               + (data[1] - data[4]) ** 2
                               + (data[2] - data[5]) ** 2)
        return c, half + data[6]
    if kind == KIND_BOX:
        c[0], c[1], c[2] = data[12], data[13], data[14]
        return c, math.sqrt(data[0] ** 2 + data[1] ** 2 + data[2] ** 2)
    return c, 1e300  # half-space: unbounded


@njit(**JIT_OPTS)
def _bound_gap(kind_a, data_a, kind_b, data_b):
    ca, ra = shape_bound(kind_a, data_a)
    cb, rb = shape_bound(kind_b, data_b)
    if ra >= 1e299 or rb >= 1e299:
        return -1e300  # half-spaces: never skip
    return _norm(cb - ca) - ra - rb


# ---------------------------------------------------------------------------
# robot-level collision


@njit(**JIT_OPTS)
def link_shapes_world(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
                      ls_kind, ls_data, ls_link, out):
    """Pose every link-attached shape in the world for configuration q."""
    nj = jtypes.shape[0]
    r = np.eye(3)
    t = np.zeros(3)
    frames_r = np.empty((nj, 3, 3))
    frames_t = np.empty((nj, 3))
    for j in range(nj):
        t = t + _mat3_vec(r, org_tr[j])
        r = _mat3_mul(r, org_rot[j])
        if jtypes[j] == 0:
            r = _mat3_mul(r, axis_angle_rot(axes[j], q[j]))
        else:
            t = t + _mat3_vec(r, axes[j]) * q[j]
        for a in range(3):
            frames_t[j, a] = t[a]
            for b in range(3):
                frames_r[j, a, b] = r[a, b]
    for s in range(ls_kind.shape[0]):
        link = ls_link[s]
        w = shape_to_world(ls_kind[s], ls_data[s],
                           frames_r[link], frames_t[link])
        for i in range(16):
            out[s, i] = w[i]


@njit(**JIT_OPTS)
def robot_collision(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
                    ls_kind, ls_data, ls_link, self_pairs,
                    ob_kind, ob_data,
                    tg_kind, tg_data, tg_rot, tg_tr,
                    include_target):
    """True iff any robot link shape penetrates an obstacle, the target
    (when included), or a non-adjacent link. Tangency is not a collision."""
    ns = ls_kind.shape[0]
    world = np.empty((ns, 16))
    link_shapes_world(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
                      ls_kind, ls_data, ls_link, world)
    for s in range(ns):
        for m in range(ob_kind.shape[0]):
            if _bound_gap(ls_kind[s], world[s], ob_kind[m], ob_data[m]) > 0.0:
                continue
            d, _, _ = dist_shapes(ls_kind[s], world[s], ob_kind[m], ob_data[m])
            if d < 0.0:
                return True
        if include_target:
            for m in range(tg_kind.shape[0]):
                tw = shape_to_world(tg_kind[m], tg_data[m], tg_rot, tg_tr)
                if _bound_gap(ls_kind[s], world[s], tg_kind[m], tw) > 0.0:
                    continue
                d, _, _ = dist_shapes(ls_kind[s], world[s], tg_kind[m], tw)
                if d < 0.0:
                    return True
    for p in range(self_pairs.shape[0]):
        i = self_pairs[p, 0]
        j = self_pairs[p, 1]
        if _bound_gap(ls_kind[i], world[i], ls_kind[j], world[j]) > 0.0:
            continue
        d, _, _ = dist_shapes(ls_kind[i], world[i], ls_kind[j], world[j])
        if d < 0.0:
            return True
    return False


# ---------------------------------------------------------------------------
# gripper model

# Fingertips extend along -z of the end-effector frame and close along the
# +-x axis toward x = 0. Lateral y offsets give the multi-finger synergies
# distinct contact rows; "parallel" is an idealized two-jaw pinch.
FINGER_LENGTH = 0.09
FINGERTIP_RADIUS = 0.008

_SYNERGY_SIDE = np.array([
    [-1.0, 1.0, 0.0, 0.0, 0.0],   # 0 parallel: thumb + jaw
    [-1.0, 1.0, 0.0, 0.0, 0.0],   # 1 thumb_index
    [-1.0, 1.0, 0.0, 0.0, 0.0],   # 2 thumb_mid
    [-1.0, 1.0, 1.0, 0.0, 0.0],   # 3 thumb_index_mid
    [-1.0, 1.0, 1.0, 1.0, 1.0],   # 4 all_hand
])
_SYNERGY_LAT = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.027, 0.0, 0.0, 0.0],
    [0.0, 0.009, 0.0, 0.0, 0.0],
    [0.0, 0.027, 0.009, 0.0, 0.0],
    [0.0, 0.027, 0.009, -0.009, -0.027],
])
_SYNERGY_COUNT = np.array([2, 2, 2, 3, 5], dtype=np.int64)


@njit(**JIT_OPTS)
def fingertip_center(ee_r, ee_t, synergy, finger, aperture, closure):
    side = _SYNERGY_SIDE[synergy, finger]
    lat = _SYNERGY_LAT[synergy, finger]
    local = np.empty(3)
    local[0] = side * 0.5 * aperture * (1.0 - closure)
    local[1] = lat
    local[2] = -FINGER_LENGTH
    return _mat3_vec(ee_r, local) + ee_t


@njit(**JIT_OPTS)
def _tip_target_distance(center, tg_kind, tg_world):
    best = 1e300
    for m in range(tg_kind.shape[0]):
        d, _, _n = sphere_shape_contact(center, FINGERTIP_RADIUS,
                                        tg_kind[m], tg_world[m])
        if d < best:
            best = d
    return best


@njit(**JIT_OPTS)
def close_fingers(ee_r, ee_t, synergy, aperture, closure, frozen,
                  tg_kind, tg_world, margin, substeps):
    """Advance unfrozen fingers toward the closure axis, stopping each at
    first contact (bisection-refined within the crossing substep)."""
    nf = _SYNERGY_COUNT[synergy]
    dc = 1.0 / substeps
    for f in range(nf):
        if frozen[f]:
            continue
        for _ in range(substeps):
            if closure[f] >= 1.0:
                break
            c_try = min(1.0, closure[f] + dc)
            center = fingertip_center(ee_r, ee_t, synergy, f, aperture, c_try)
            d = _tip_target_distance(center, tg_kind, tg_world)
            if d <= margin:
                lo = closure[f]
                hi = c_try
                for _ in range(12):
                    mid = 0.5 * (lo + hi)
                    center = fingertip_center(ee_r, ee_t, synergy, f, aperture, mid)
                    if _tip_target_distance(center, tg_kind, tg_world) <= margin:
                        hi = mid
                    else:
                        lo = mid
                closure[f] = hi
                frozen[f] = True
                break
            closure[f] = c_try


@njit(**JIT_OPTS)
def collect_contacts(ee_r, ee_t, synergy, aperture, closure,
                     tg_kind, tg_world, obj_r, obj_t, margin,
                     mask, points, normals):
    """Fill per-finger contact mask/points/normals (object frame)."""
    nf = _SYNERGY_COUNT[synergy]
    count = 0
    for f in range(F_MAX):
        mask[f] = False
    for f in range(nf):
        center = fingertip_center(ee_r, ee_t, synergy, f, aperture, closure[f])
        best = 1e300
        bp = np.zeros(3)
        bn = np.zeros(3)
        for m in range(tg_kind.shape[0]):
            d, pt, nrm = sphere_shape_contact(center, FINGERTIP_RADIUS,
                                              tg_kind[m], tg_world[m])
            if d < best:
                best = d
                bp = pt
                bn = nrm
        if best <= margin:
            mask[f] = True
            p_obj = _mat3_t_vec(obj_r, bp - obj_t)
            n_obj = _mat3_t_vec(obj_r, bn)
            for i in range(3):
                points[f, i] = p_obj[i]
                normals[f, i] = n_obj[i]
            count += 1
    return count


@njit(**JIT_OPTS)
def grasp_pair_conditions(mask, points, normals, com, closure_axis,
                          opposition_cos):
    """Conditions (a) and (b): an opposing contact pair exists, and the
    contact spread straddles the center of mass along the closure axis."""
    n_active = 0
    for f in range(F_MAX):
        if mask[f]:
            n_active += 1
    if n_active < 2:
        return False
    opposing = False
    for i in range(F_MAX):
        if not mask[i]:
            continue
        for j in range(i + 1, F_MAX):
            if not mask[j]:
                continue
            d = (normals[i, 0] * normals[j, 0]
                 + normals[i, 1] * normals[j, 1]
                 + normals[i, 2] * normals[j, 2])
            if d <= -opposition_cos:
                opposing = True
                break
        if opposing:
            break
    if not opposing:
        return False
    smin = 1e300
    smax = -1e300
    for f in range(F_MAX):
        if not mask[f]:
            continue
        s = (closure_axis[0] * (points[f, 0] - com[0])
             + closure_axis[1] * (points[f, 1] - com[1])
             + closure_axis[2] * (points[f, 2] - com[2]))
        if s < smin:
            smin = s
        if s > smax:
            smax = s
    return smin <= 0.0 <= smax


# ---------------------------------------------------------------------------
# rollout


@njit(**JIT_OPTS)
def rollout_kernel(
        # robot
        jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, limits, reach_bound,
        masses, gravity, q_home,
        ls_kind, ls_data, ls_link, self_pairs,
        # scene
        ob_kind, ob_data,
        tg_kind, tg_data, tg_rot_nom, tg_tr_nom, tg_mass, tg_com,
        # trajectory
        states, close_step, synergy, aperture,
        # noise
        pose_drot, pose_dtr, joint_noise, mass_scale, com_off, margin_off,
        # parameters
        ik_damping, ik_clamp, ik_iters, ik_tol_pos, ik_tol_rot,
        contact_margin, closure_substeps, opposition_cos, lift_height,
        # outputs
        joint_path, obj_rot_path, obj_tr_path, torque_path,
        contact_mask, contact_points, contact_normals):
    """Kinematic grasp rollout. Returns
    (status, n_valid, grasp_start, grasp_end, success, lift_ok)."""
    n = states.shape[0]
    nj = jtypes.shape[0]

    # noised target pose: rotation perturbed about the object center,
    # translation offset in world
    obj_r = _mat3_mul(pose_drot, tg_rot_nom)
    obj_t = tg_tr_nom + pose_dtr
    margin = contact_margin + margin_off
    if margin < 1e-6:
        margin = 1e-6
    eff_mass = tg_mass * mass_scale
    com = tg_com + com_off

    tg_world = np.empty((tg_kind.shape[0], 16))
    for m in range(tg_kind.shape[0]):
        w = shape_to_world(tg_kind[m], tg_data[m], obj_r, obj_t)
        for i in range(16):
            tg_world[m, i] = w[i]

    closure = np.zeros(F_MAX)
    frozen = np.zeros(F_MAX, dtype=np.bool_)
    attached = False
    attach_r = np.eye(3)
    attach_t = np.zeros(3)
    grasp_start = close_step
    grasp_end = n
    q_prev = q_home.copy()
    last_ee_r = np.eye(3)
    last_ee_t = np.zeros(3)
    q_final = q_home.copy()

    status = STATUS_OK
    n_valid = 0

    for i in range(n):
        target_r = euler_to_rot(states[i, 3], states[i, 4], states[i, 5])
        target_t = states[i, 0:3].copy()
        ok, q, _pe, _re, _it = ik_solve(
            jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, limits, reach_bound,
            target_r, target_t, q_prev,
            ik_damping, ik_clamp, ik_iters, ik_tol_pos, ik_tol_rot)
        if not ok:
            status = STATUS_IK
            break
        q_exec = q.copy()
        for j in range(nj):
            q_exec[j] += joint_noise[i, j]
            if q_exec[j] < limits[j, 0]:
                q_exec[j] = limits[j, 0]
            elif q_exec[j] > limits[j, 1]:
                q_exec[j] = limits[j, 1]
        for j in range(nj):
            joint_path[i, j] = q_exec[j]

        include_target = i < close_step
        if robot_collision(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q_exec,
                           ls_kind, ls_data, ls_link, self_pairs,
                           ob_kind, ob_data,
                           tg_kind, tg_data, obj_r, obj_t,
                           include_target):
            # record the colliding step so diagnostics can point at it
            for a in range(3):
                for b in range(3):
                    obj_rot_path[i, a, b] = obj_r[a, b]
                obj_tr_path[i, a] = obj_t[a]
            tau = gravity_torques(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr,
                                  q_exec, masses, gravity, 0.0)
            for j in range(nj):
                torque_path[i, j] = tau[j]
            for f in range(F_MAX):
                contact_mask[i, f] = False
            n_valid = i + 1
            status = STATUS_COLLISION
            break

        z_world = np.empty((nj, 3))
        p_axis = np.empty((nj, 3))
        p_org = np.empty((nj, 3))
        ee_r, ee_t = fk_chain(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr,
                              q_exec, z_world, p_axis, p_org)
        last_ee_r = ee_r
        last_ee_t = ee_t
        q_final = q_exec.copy()

        if attached:
            obj_r = _mat3_mul(ee_r, attach_r)
            obj_t = _mat3_vec(ee_r, attach_t) + ee_t
            for m in range(tg_kind.shape[0]):
                w = shape_to_world(tg_kind[m], tg_data[m], obj_r, obj_t)
                for k in range(16):
                    tg_world[m, k] = w[k]
        elif i >= close_step:
            close_fingers(ee_r, ee_t, synergy, aperture, closure, frozen,
                          tg_kind, tg_world, margin, closure_substeps)

        count = collect_contacts(ee_r, ee_t, synergy, aperture, closure,
                                 tg_kind, tg_world, obj_r, obj_t, margin,
                                 contact_mask[i], contact_points[i],
                                 contact_normals[i])

        if not attached and i >= close_step and count >= 2:
            axis_w = np.empty(3)
            axis_w[0], axis_w[1], axis_w[2] = ee_r[0, 0], ee_r[1, 0], ee_r[2, 0]
            axis_obj = _mat3_t_vec(obj_r, axis_w)
            if grasp_pair_conditions(contact_mask[i], contact_points[i],
                                     contact_normals[i], com, axis_obj,
                                     opposition_cos):
                attached = True
                grasp_end = i
                rel_r = _mat3_mul(ee_r.T.copy(), obj_r)
                rel_t = _mat3_t_vec(ee_r, obj_t - ee_t)
                attach_r = rel_r
                attach_t = rel_t

        for a in range(3):
            for b in range(3):
                obj_rot_path[i, a, b] = obj_r[a, b]
            obj_tr_path[i, a] = obj_t[a]
        payload = eff_mass if attached else 0.0
        tau = gravity_torques(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr,
                              q_exec, masses, gravity, payload)
        for j in range(nj):
            torque_path[i, j] = tau[j]
        q_prev = q
        n_valid = i + 1

    success = False
    lift_ok = False
    if status == STATUS_OK and attached:
        # post-grasp lift check: command the final pose raised by lift_height;
        # the object follows the command while the fingers follow the IK
        # solution, so tracking error shows up as contact drift.
        lift_t = last_ee_t.copy()
        lift_t[2] += lift_height
        ok, q_lift, _pe, _re, _it = ik_solve(
            jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, limits, reach_bound,
            last_ee_r, lift_t, q_final,
            ik_damping, ik_clamp, ik_iters, ik_tol_pos, ik_tol_rot)
        if ok:
            z_world = np.empty((nj, 3))
            p_axis = np.empty((nj, 3))
            p_org = np.empty((nj, 3))
            ee_r2, ee_t2 = fk_chain(jtypes, axes, org_rot, org_tr,
                                    ee_rot, ee_tr, q_lift,
                                    z_world, p_axis, p_org)
            lifted_r = obj_r
            lifted_t = obj_t.copy()
            lifted_t[2] += lift_height
            lifted_world = np.empty((tg_kind.shape[0], 16))
            for m in range(tg_kind.shape[0]):
                w = shape_to_world(tg_kind[m], tg_data[m], lifted_r, lifted_t)
                for k in range(16):
                    lifted_world[m, k] = w[k]
            lift_ok = True
            last = n_valid - 1
            for f in range(F_MAX):
                if not contact_mask[last, f]:
                    continue
                center = fingertip_center(ee_r2, ee_t2, synergy, f,
                                          aperture, closure[f])
                d = _tip_target_distance(center, tg_kind, lifted_world)
                if d > margin:
                    lift_ok = False
                    break
        if lift_ok:
            last = n_valid - 1
            count = 0
            for f in range(F_MAX):
                if contact_mask[last, f]:
                    count += 1
            success = count >= 2
    return status, n_valid, grasp_start, grasp_end, success, lift_ok


@njit(**JIT_OPTS)
def track_filter_kernel(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, limits,
                        reach_bound, q_home,
                        ls_kind, ls_data, ls_link, self_pairs,
                        ob_kind, ob_data,
                        tg_kind, tg_data, tg_rot, tg_tr,
                        states, close_step,
                        ik_damping, ik_clamp, ik_iters, ik_tol_pos, ik_tol_rot,
                        max_joint_jump, joint_path):
    """Feasibility filter: IK-track every waypoint, check joint jumps and
    collisions (target ignored from the closure step on).

    Returns (accepted, first_fail_step, cause) with cause:
    0 none, 1 ik, 2 joint_jump, 3 collision.
    """
    n = states.shape[0]
    nj = jtypes.shape[0]
    q_prev = q_home.copy()
    for i in range(n):
        target_r = euler_to_rot(states[i, 3], states[i, 4], states[i, 5])
        target_t = states[i, 0:3].copy()
        ok, q, _pe, _re, _it = ik_solve(
            jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, limits, reach_bound,
            target_r, target_t, q_prev,
            ik_damping, ik_clamp, ik_iters, ik_tol_pos, ik_tol_rot)
        if not ok:
            return False, i, 1
        for j in range(nj):
            joint_path[i, j] = q[j]
        if i > 0:
            for j in range(nj):
                if abs(q[j] - q_prev[j]) > max_joint_jump:
                    return False, i, 2
        include_target = i < close_step
        if robot_collision(jtypes, axes, org_rot, org_tr, ee_rot, ee_tr, q,
                           ls_kind, ls_data, ls_link, self_pairs,
                           ob_kind, ob_data,
                           tg_kind, tg_data, tg_rot, tg_tr,
                           include_target):
            return False, i, 3
        q_prev = q
    return True, -1, 0
