"""Flatten a SceneDesc into the array soup the traversal kernels consume.

Each object's shapes are lowered to triangles in object space:
  * triangle meshes pass through (half flag 0),
  * quads split along the (a,c) diagonal into halves (a,b,c) flag 1 and
    (a,c,d) flag 2, so bilinear quad coordinates can be recovered from
    barycentrics later,
  * curves are tessellated into camera-facing ribbons at compile time and
    then treated as quads.

Per object a bottom-level BVH is built and its triangles are stored in
traversal order, so leaves reference contiguous global ranges. A top-level
BVH over per-instance world bounds completes the two-level structure.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scene.curves import tessellate_curves
from ..scene.model import CurveSet, QuadMesh, SceneDesc, TriangleMesh
from .bvh import build_bvh

TRI_PLAIN = 0
QUAD_HALF_A = 1  # (a, b, c): s = u + v, t = v
QUAD_HALF_B = 2  # (a, c, d): s = u,     t = u + v

DEFAULT_SEGMENTS_PER_SPAN = 8


@dataclass
class CompiledScene:
    # per-triangle soup, object space, ordered by BLAS traversal order
    tri_v0: np.ndarray    # (p, 3) float32
    tri_e1: np.ndarray    # (p, 3) float32
    tri_e2: np.ndarray    # (p, 3) float32
    tri_info: np.ndarray  # (p, 4) int32: geom, prim, half flag, material
    # per-object
    obj_tri_start: np.ndarray  # (o,) int32
    obj_tri_end: np.ndarray    # (o,) int32
    obj_root: np.ndarray       # (o,) int32, -1 when the object has no geometry
    blas_bounds: np.ndarray    # (nb, 6) float32, all objects concatenated
    blas_meta: np.ndarray      # (nb, 2) int32, child/leaf refs globalized
    # per-instance
    inst_obj: np.ndarray  # (i,) int32
    inst_xf: np.ndarray   # (i, 12) float32, world-from-object affine rows
    inst_inv: np.ndarray  # (i, 12) float32, object-from-world affine rows
    inst_nrm: np.ndarray  # (i, 9) float32, inverse-transpose linear part
    # top level
    tlas_bounds: np.ndarray  # (nt, 6) float32
    tlas_meta: np.ndarray    # (nt, 2) int32
    tlas_order: np.ndarray   # leaf ranges index this instance permutation
    world_min: np.ndarray    # (3,) float64
    world_max: np.ndarray

    @property
    def triangle_count(self) -> int:
        return len(self.tri_v0)

    @property
    def instance_count(self) -> int:
        return len(self.inst_obj)


def _quad_to_tris(indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split (m,4) quads into 2m triangles plus their half flags."""
    a, b, c, d = indices[:, 0], indices[:, 1], indices[:, 2], indices[:, 3]
    tris = np.empty((len(indices) * 2, 3), np.uint32)
    tris[0::2] = np.stack([a, b, c], axis=1)
    tris[1::2] = np.stack([a, c, d], axis=1)
    flags = np.empty(len(indices) * 2, np.int32)
    flags[0::2] = QUAD_HALF_A
    flags[1::2] = QUAD_HALF_B
    prims = np.repeat(np.arange(len(indices), dtype=np.int32), 2)
    return tris, np.stack([prims, flags], axis=1)


def _lower_object(obj, camera_hint, segments_per_span):
    """Return (v0, e1, e2, info) for one object; info lacks the material row."""
    v0s, e1s, e2s, infos = [], [], [], []
    for geom_id, shape in enumerate(obj.shapes):
        g = shape.geometry
        if isinstance(g, TriangleMesh):
            tris = g.indices
            meta = np.stack([np.arange(len(tris), dtype=np.int32),
                             np.full(len(tris), TRI_PLAIN, np.int32)], axis=1)
            pos = g.positions
        else:
            if isinstance(g, CurveSet):
                g = tessellate_curves(g, segments_per_span, camera_hint)
            assert isinstance(g, QuadMesh)
            tris, meta = _quad_to_tris(g.indices)
            pos = g.positions
        if len(tris) == 0:
            continue
        p = pos[tris]  # (m, 3, 3)
        v0s.append(p[:, 0])
        e1s.append(p[:, 1] - p[:, 0])
        e2s.append(p[:, 2] - p[:, 0])
        info = np.empty((len(tris), 4), np.int32)
        info[:, 0] = geom_id
        info[:, 1] = meta[:, 0]
        info[:, 2] = meta[:, 1]
        info[:, 3] = shape.material_ref
        infos.append(info)
    if not v0s:
        z3 = np.zeros((0, 3), np.float32)
        return z3, z3.copy(), z3.copy(), np.zeros((0, 4), np.int32)
    return (np.concatenate(v0s).astype(np.float32),
            np.concatenate(e1s).astype(np.float32),
            np.concatenate(e2s).astype(np.float32),
            np.concatenate(infos))


def _affine_rows(m34: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(m34, np.float32).reshape(12)


def _invert_affine(m34: np.ndarray) -> np.ndarray:
    m = np.eye(4)
    m[:3, :4] = m34.astype(np.float64)
    return np.linalg.inv(m)[:3, :4]


def compile_scene(scene: SceneDesc,
                  segments_per_span: int = DEFAULT_SEGMENTS_PER_SPAN) -> CompiledScene:
    cam = scene.camera
    hint = cam.look_at.astype(np.float64) - cam.position.astype(np.float64)
    if np.linalg.norm(hint) < 1e-12:
        hint = None

    tri_v0, tri_e1, tri_e2, tri_info = [], [], [], []
    blas_bounds, blas_meta = [], []
    obj_start = np.zeros(len(scene.objects), np.int32)
    obj_end = np.zeros(len(scene.objects), np.int32)
    obj_root = np.full(len(scene.objects), -1, np.int32)
    obj_box = np.zeros((len(scene.objects), 6), np.float64)
    tri_base = 0
    node_base = 0
    for oi, obj in enumerate(scene.objects):
        v0, e1, e2, info = _lower_object(obj, hint, segments_per_span)
        obj_start[oi] = tri_base
        obj_end[oi] = tri_base + len(v0)
        if len(v0) == 0:
            continue
        corners = np.stack([v0, v0 + e1, v0 + e2])  # (3, m, 3)
        lo = corners.min(axis=0)
        hi = corners.max(axis=0)
        bvh = build_bvh(lo, hi)
        perm = bvh.primitive_order
        tri_v0.append(v0[perm])
        tri_e1.append(e1[perm])
        tri_e2.append(e2[perm])
        tri_info.append(info[perm])
        meta = bvh.node_meta.copy()
        leaves = meta[:, 0] < 0
        meta[leaves, 0] -= tri_base          # -(start+1) - base = -(start+base+1)
        meta[~leaves] += node_base
        blas_bounds.append(bvh.node_bounds)
        blas_meta.append(meta)
        obj_root[oi] = node_base
        obj_box[oi, :3] = bvh.node_bounds[0, :3]
        obj_box[oi, 3:] = bvh.node_bounds[0, 3:]
        tri_base += len(v0)
        node_base += bvh.node_count

    def cat(parts, width, dtype):
        if parts:
            return np.ascontiguousarray(np.concatenate(parts), dtype)
        return np.zeros((0, width), dtype)

    tri_v0 = cat(tri_v0, 3, np.float32)
    tri_e1 = cat(tri_e1, 3, np.float32)
    tri_e2 = cat(tri_e2, 3, np.float32)
    tri_info = cat(tri_info, 4, np.int32)

    n_inst = len(scene.instances)
    inst_obj = np.zeros(n_inst, np.int32)
    inst_xf = np.zeros((n_inst, 12), np.float32)
    inst_inv = np.zeros((n_inst, 12), np.float32)
    inst_nrm = np.zeros((n_inst, 9), np.float32)
    world_lo = np.full((n_inst, 3), np.inf)
    world_hi = np.full((n_inst, 3), -np.inf)
    live = []
    for ii, inst in enumerate(scene.instances):
        inst_obj[ii] = inst.object_ref
        inst_xf[ii] = _affine_rows(inst.transform)
        inv = _invert_affine(inst.transform)
        inst_inv[ii] = _affine_rows(inv)
        lin = inst.transform[:3, :3].astype(np.float64)
        inst_nrm[ii] = np.linalg.inv(lin).T.reshape(9).astype(np.float32)
        if obj_root[inst.object_ref] < 0:
            continue
        lo = obj_box[inst.object_ref, :3]
        hi = obj_box[inst.object_ref, 3:]
        corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                            for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
        world = corners @ lin.T + inst.transform[:3, 3].astype(np.float64)
        world_lo[ii] = world.min(axis=0)
        world_hi[ii] = world.max(axis=0)
        live.append(ii)

    if live:
        live = np.array(live, np.int32)
        tlas = build_bvh(world_lo[live], world_hi[live])
        tlas_order = live[tlas.primitive_order]
        tlas_bounds = tlas.node_bounds
        tlas_meta = tlas.node_meta
        wmin = world_lo[live].min(axis=0)
        wmax = world_hi[live].max(axis=0)
    else:
        tlas_order = np.zeros(0, np.int32)
        tlas_bounds = np.zeros((0, 6), np.float32)
        tlas_meta = np.zeros((0, 2), np.int32)
        wmin = np.zeros(3)
        wmax = np.zeros(3)

    return CompiledScene(
        tri_v0=tri_v0, tri_e1=tri_e1, tri_e2=tri_e2, tri_info=tri_info,
        obj_tri_start=obj_start, obj_tri_end=obj_end, obj_root=obj_root,
        blas_bounds=cat(blas_bounds, 6, np.float32),
        blas_meta=cat(blas_meta, 2, np.int32),
        inst_obj=inst_obj, inst_xf=inst_xf, inst_inv=inst_inv, inst_nrm=inst_nrm,
        tlas_bounds=tlas_bounds, tlas_meta=tlas_meta,
        tlas_order=np.ascontiguousarray(tlas_order, np.int32),
        world_min=wmin, world_max=wmax)
