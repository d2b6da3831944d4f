"""Numba kernels: ray/triangle tests, two-level BVH traversal, brute force.

The production traversal and the brute-force reference share the same
single-precision Moller-Trumbore kernel and the same object-space transform,
so hits agree bit-for-bit and ties can be broken exactly by
(t, instance, geom, prim, half) without matching any float rounding.
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange

F32 = np.float32
MAX_STACK = 64


@njit(cache=True, inline="always")
def _tri_hit(ox, oy, oz, dx, dy, dz, v0x, v0y, v0z,
             e1x, e1y, e1z, e2x, e2y, e2z, tmin, tmax):
    """Single-precision Moller-Trumbore. Returns (t, u, v); t<0 on miss."""
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if -F32(1e-12) < det < F32(1e-12):
        return F32(-1.0), F32(0.0), F32(0.0)
    inv_det = F32(1.0) / det
    sx = ox - v0x
    sy = oy - v0y
    sz = oz - v0z
    u = (sx * px + sy * py + sz * pz) * inv_det
    if u < F32(0.0) or u > F32(1.0):
        return F32(-1.0), F32(0.0), F32(0.0)
    qx = sy * e1z - sz * e1y
    qy = sz * e1x - sx * e1z
    qz = sx * e1y - sy * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv_det
    if v < F32(0.0) or u + v > F32(1.0):
        return F32(-1.0), F32(0.0), F32(0.0)
    t = (e2x * qx + e2y * qy + e2z * qz) * inv_det
    if t <= tmin or t >= tmax:
        return F32(-1.0), F32(0.0), F32(0.0)
    return t, u, v


@njit(cache=True, inline="always")
def _box_hit(ox, oy, oz, rx, ry, rz, b, tmin, tmax):
    """Slab test against the interval [tmin, tmax]; works for tmax = inf."""
    near = tmin
    far = tmax
    t1 = (b[0] - ox) * rx
    t2 = (b[3] - ox) * rx
    if t1 > t2:
        t1, t2 = t2, t1
    if t1 > near:
        near = t1
    if t2 < far:
        far = t2
    t1 = (b[1] - oy) * ry
    t2 = (b[4] - oy) * ry
    if t1 > t2:
        t1, t2 = t2, t1
    if t1 > near:
        near = t1
    if t2 < far:
        far = t2
    t1 = (b[2] - oz) * rz
    t2 = (b[5] - oz) * rz
    if t1 > t2:
        t1, t2 = t2, t1
    if t1 > near:
        near = t1
    if t2 < far:
        far = t2
    return near <= far


@njit(cache=True, inline="always")
def _better(t, inst, geom, prim, half, bt, binst, bgeom, bprim, bhalf):
    """Tie rule: smaller t, then lowest (instance, geom, prim, half)."""
    if t < bt:
        return True
    if t > bt:
        return False
    if inst != binst:
        return inst < binst
    if geom != bgeom:
        return geom < bgeom
    if prim != bprim:
        return prim < bprim
    return half < bhalf


@njit(cache=True)
def _blas_intersect(ox, oy, oz, dx, dy, dz, tmin, root,
                    blas_bounds, blas_meta, tri_v0, tri_e1, tri_e2, tri_info,
                    inst_id, bt, binst, bgeom, bprim, bhalf, bu, bv, btri, steps):
    """Object-space traversal; returns updated best tuple and step count."""
    rx = F32(1.0) / dx if dx != F32(0.0) else F32(np.inf)
    ry = F32(1.0) / dy if dy != F32(0.0) else F32(np.inf)
    rz = F32(1.0) / dz if dz != F32(0.0) else F32(np.inf)
    stack = np.empty(MAX_STACK, np.int32)
    sp = 0
    stack[0] = root
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        steps += 1
        if not _box_hit(ox, oy, oz, rx, ry, rz, blas_bounds[node], tmin, bt):
            continue
        m0 = blas_meta[node, 0]
        m1 = blas_meta[node, 1]
        if m0 < 0:
            start = -m0 - 1
            for k in range(start, start + m1):
                t, u, v = _tri_hit(ox, oy, oz, dx, dy, dz,
                                   tri_v0[k, 0], tri_v0[k, 1], tri_v0[k, 2],
                                   tri_e1[k, 0], tri_e1[k, 1], tri_e1[k, 2],
                                   tri_e2[k, 0], tri_e2[k, 1], tri_e2[k, 2],
                                   tmin, bt * F32(1.0000001) + F32(1e-30))
                if t >= F32(0.0):
                    geom = tri_info[k, 0]
                    prim = tri_info[k, 1]
                    half = tri_info[k, 2]
                    if _better(t, inst_id, geom, prim, half,
                               bt, binst, bgeom, bprim, bhalf):
                        bt = t
                        binst = inst_id
                        bgeom = geom
                        bprim = prim
                        bhalf = half
                        bu = u
                        bv = v
                        btri = k
        else:
            if sp + 2 <= MAX_STACK:
                stack[sp] = m0
                sp += 1
                stack[sp] = m1
                sp += 1
    return bt, binst, bgeom, bprim, bhalf, bu, bv, btri, steps


@njit(cache=True, parallel=True)
def two_level_intersect(origins, dirs, tmins, tmaxs,
                        tlas_bounds, tlas_meta, tlas_order,
                        inst_obj, inst_inv, obj_root,
                        blas_bounds, blas_meta,
                        tri_v0, tri_e1, tri_e2, tri_info,
                        out_t, out_inst, out_geom, out_prim, out_half,
                        out_u, out_v, out_tri, out_steps):
    n = origins.shape[0]
    have_tlas = tlas_bounds.shape[0] > 0
    for i in prange(n):
        ox = origins[i, 0]
        oy = origins[i, 1]
        oz = origins[i, 2]
        dx = dirs[i, 0]
        dy = dirs[i, 1]
        dz = dirs[i, 2]
        tmin = tmins[i]
        bt = tmaxs[i]
        binst = np.int32(2147483647)
        bgeom = np.int32(2147483647)
        bprim = np.int32(2147483647)
        bhalf = np.int32(2147483647)
        bu = F32(0.0)
        bv = F32(0.0)
        btri = np.int32(-1)
        steps = 0
        if have_tlas:
            rx = F32(1.0) / dx if dx != F32(0.0) else F32(np.inf)
            ry = F32(1.0) / dy if dy != F32(0.0) else F32(np.inf)
            rz = F32(1.0) / dz if dz != F32(0.0) else F32(np.inf)
            stack = np.empty(MAX_STACK, np.int32)
            stack[0] = 0
            sp = 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                steps += 1
                if not _box_hit(ox, oy, oz, rx, ry, rz, tlas_bounds[node],
                                tmin, bt):
                    continue
                m0 = tlas_meta[node, 0]
                m1 = tlas_meta[node, 1]
                if m0 < 0:
                    start = -m0 - 1
                    for k in range(start, start + m1):
                        inst = tlas_order[k]
                        root = obj_root[inst_obj[inst]]
                        if root < 0:
                            continue
                        inv = inst_inv[inst]
                        iox = inv[0] * ox + inv[1] * oy + inv[2] * oz + inv[3]
                        ioy = inv[4] * ox + inv[5] * oy + inv[6] * oz + inv[7]
                        ioz = inv[8] * ox + inv[9] * oy + inv[10] * oz + inv[11]
                        idx = inv[0] * dx + inv[1] * dy + inv[2] * dz
                        idy = inv[4] * dx + inv[5] * dy + inv[6] * dz
                        idz = inv[8] * dx + inv[9] * dy + inv[10] * dz
                        bt, binst, bgeom, bprim, bhalf, bu, bv, btri, steps = \
                            _blas_intersect(iox, ioy, ioz, idx, idy, idz, tmin, root,
                                            blas_bounds, blas_meta,
                                            tri_v0, tri_e1, tri_e2, tri_info,
                                            np.int32(inst), bt, binst, bgeom,
                                            bprim, bhalf, bu, bv, btri, steps)
                else:
                    if sp + 2 <= MAX_STACK:
                        stack[sp] = m0
                        sp += 1
                        stack[sp] = m1
                        sp += 1
        if btri >= 0:
            out_t[i] = bt
            out_inst[i] = binst
            out_geom[i] = bgeom
            out_prim[i] = bprim
            out_half[i] = bhalf
            out_u[i] = bu
            out_v[i] = bv
            out_tri[i] = btri
        else:
            out_t[i] = F32(-1.0)
            out_inst[i] = -1
            out_geom[i] = -1
            out_prim[i] = -1
            out_half[i] = -1
            out_u[i] = F32(0.0)
            out_v[i] = F32(0.0)
            out_tri[i] = -1
        out_steps[i] = steps


@njit(cache=True, parallel=True)
def two_level_occluded(origins, dirs, tmins, tmaxs,
                       tlas_bounds, tlas_meta, tlas_order,
                       inst_obj, inst_inv, obj_root,
                       blas_bounds, blas_meta,
                       tri_v0, tri_e1, tri_e2, tri_info, out_hit):
    n = origins.shape[0]
    have_tlas = tlas_bounds.shape[0] > 0
    for i in prange(n):
        ox = origins[i, 0]
        oy = origins[i, 1]
        oz = origins[i, 2]
        dx = dirs[i, 0]
        dy = dirs[i, 1]
        dz = dirs[i, 2]
        tmin = tmins[i]
        tmax = tmaxs[i]
        hit = False
        if have_tlas:
            rx = F32(1.0) / dx if dx != F32(0.0) else F32(np.inf)
            ry = F32(1.0) / dy if dy != F32(0.0) else F32(np.inf)
            rz = F32(1.0) / dz if dz != F32(0.0) else F32(np.inf)
            stack = np.empty(MAX_STACK, np.int32)
            stack[0] = 0
            sp = 1
            while sp > 0 and not hit:
                sp -= 1
                nid = stack[sp]
                if not _box_hit(ox, oy, oz, rx, ry, rz, tlas_bounds[nid],
                                tmin, tmax):
                    continue
                m0 = tlas_meta[nid, 0]
                m1 = tlas_meta[nid, 1]
                if m0 < 0:
                    start = -m0 - 1
                    for k in range(start, start + m1):
                        inst = tlas_order[k]
                        root = obj_root[inst_obj[inst]]
                        if root < 0:
                            continue
                        inv = inst_inv[inst]
                        iox = inv[0] * ox + inv[1] * oy + inv[2] * oz + inv[3]
                        ioy = inv[4] * ox + inv[5] * oy + inv[6] * oz + inv[7]
                        ioz = inv[8] * ox + inv[9] * oy + inv[10] * oz + inv[11]
                        idx = inv[0] * dx + inv[1] * dy + inv[2] * dz
                        idy = inv[4] * dx + inv[5] * dy + inv[6] * dz
                        idz = inv[8] * dx + inv[9] * dy + inv[10] * dz
                        if _blas_occluded(iox, ioy, ioz, idx, idy, idz, tmin, tmax,
                                          root, blas_bounds, blas_meta,
                                          tri_v0, tri_e1, tri_e2):
                            hit = True
                            break
                else:
                    if sp + 2 <= MAX_STACK:
                        stack[sp] = m0
                        sp += 1
                        stack[sp] = m1
                        sp += 1
        out_hit[i] = hit


@njit(cache=True)
def _blas_occluded(ox, oy, oz, dx, dy, dz, tmin, tmax, root,
                   blas_bounds, blas_meta, tri_v0, tri_e1, tri_e2):
    rx = F32(1.0) / dx if dx != F32(0.0) else F32(np.inf)
    ry = F32(1.0) / dy if dy != F32(0.0) else F32(np.inf)
    rz = F32(1.0) / dz if dz != F32(0.0) else F32(np.inf)
    stack = np.empty(MAX_STACK, np.int32)
    stack[0] = root
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _box_hit(ox, oy, oz, rx, ry, rz, blas_bounds[node], tmin, tmax):
            continue
        m0 = blas_meta[node, 0]
        m1 = blas_meta[node, 1]
        if m0 < 0:
            start = -m0 - 1
            for k in range(start, start + m1):
                t, u, v = _tri_hit(ox, oy, oz, dx, dy, dz,
                                   tri_v0[k, 0], tri_v0[k, 1], tri_v0[k, 2],
                                   tri_e1[k, 0], tri_e1[k, 1], tri_e1[k, 2],
                                   tri_e2[k, 0], tri_e2[k, 1], tri_e2[k, 2],
                                   tmin, tmax)
                if t >= F32(0.0):
                    return True
        else:
            if sp + 2 <= MAX_STACK:
                stack[sp] = m0
                sp += 1
                stack[sp] = m1
                sp += 1
    return False


@njit(cache=True, parallel=True)
def brute_force_intersect(origins, dirs, tmins, tmaxs,
                          inst_obj, inst_inv,
                          obj_tri_start, obj_tri_end,
                          tri_v0, tri_e1, tri_e2, tri_info,
                          out_t, out_inst, out_geom, out_prim, out_half,
                          out_u, out_v, out_tri):
    """Reference intersector: every instance, every primitive, same tie rule."""
    n = origins.shape[0]
    n_inst = inst_obj.shape[0]
    for i in prange(n):
        ox = origins[i, 0]
        oy = origins[i, 1]
        oz = origins[i, 2]
        dx = dirs[i, 0]
        dy = dirs[i, 1]
        dz = dirs[i, 2]
        tmin = tmins[i]
        bt = tmaxs[i]
        binst = np.int32(2147483647)
        bgeom = np.int32(2147483647)
        bprim = np.int32(2147483647)
        bhalf = np.int32(2147483647)
        bu = F32(0.0)
        bv = F32(0.0)
        btri = np.int32(-1)
        for inst in range(n_inst):
            obj = inst_obj[inst]
            inv = inst_inv[inst]
            iox = inv[0] * ox + inv[1] * oy + inv[2] * oz + inv[3]
            ioy = inv[4] * ox + inv[5] * oy + inv[6] * oz + inv[7]
            ioz = inv[8] * ox + inv[9] * oy + inv[10] * oz + inv[11]
            idx = inv[0] * dx + inv[1] * dy + inv[2] * dz
            idy = inv[4] * dx + inv[5] * dy + inv[6] * dz
            idz = inv[8] * dx + inv[9] * dy + inv[10] * dz
            for k in range(obj_tri_start[obj], obj_tri_end[obj]):
                t, u, v = _tri_hit(iox, ioy, ioz, idx, idy, idz,
                                   tri_v0[k, 0], tri_v0[k, 1], tri_v0[k, 2],
                                   tri_e1[k, 0], tri_e1[k, 1], tri_e1[k, 2],
                                   tri_e2[k, 0], tri_e2[k, 1], tri_e2[k, 2],
                                   tmin, bt * F32(1.0000001) + F32(1e-30))
                if t >= F32(0.0):
                    geom = tri_info[k, 0]
                    prim = tri_info[k, 1]
                    half = tri_info[k, 2]
                    if _better(t, np.int32(inst), geom, prim, half,
                               bt, binst, bgeom, bprim, bhalf):
                        bt = t
                        binst = np.int32(inst)
                        bgeom = geom
                        bprim = prim
                        bhalf = half
                        bu = u
                        bv = v
                        btri = k
        if btri >= 0:
            out_t[i] = bt
            out_inst[i] = binst
            out_geom[i] = bgeom
            out_prim[i] = bprim
            out_half[i] = bhalf
            out_u[i] = bu
            out_v[i] = bv
            out_tri[i] = btri
        else:
            out_t[i] = F32(-1.0)
            out_inst[i] = -1
            out_geom[i] = -1
            out_prim[i] = -1
            out_half[i] = -1
            out_u[i] = F32(0.0)
            out_v[i] = F32(0.0)
            out_tri[i] = -1
