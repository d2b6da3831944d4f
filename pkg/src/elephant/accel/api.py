"""Batch ray queries against a compiled two-level BVH.

`TwoLevelAccel.intersect` and `.brute_force_intersect` share the same
triangle kernel and tie rule (nearest t, then lowest (instance, geom, prim)),
so they return identical hits; the brute-force path exists as a reference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scene.model import SceneDesc
from . import kernels
from .compile import (DEFAULT_SEGMENTS_PER_SPAN, QUAD_HALF_A, QUAD_HALF_B,
                      CompiledScene, compile_scene)


@dataclass
class HitBatch:
    """Structure-of-arrays hit records; miss rows have t == -1 and ids == -1."""
    t: np.ndarray            # (n,) float32
    instance_id: np.ndarray  # (n,) int32
    geom_id: np.ndarray      # (n,) int32
    prim_id: np.ndarray      # (n,) int32
    u: np.ndarray            # (n,) float32, quad-bilinear or barycentric coords
    v: np.ndarray            # (n,) float32
    material_id: np.ndarray  # (n,) int32
    position: np.ndarray     # (n, 3) float32, world space
    normal: np.ndarray       # (n, 3) float32, unit geometric normal
    steps: np.ndarray        # (n,) int32, BVH nodes visited (0 for brute force)

    @property
    def hit_mask(self) -> np.ndarray:
        return self.t >= 0.0


def _prep_rays(origins, dirs, tmin, tmax):
    origins = np.ascontiguousarray(origins, np.float32).reshape(-1, 3)
    dirs = np.ascontiguousarray(dirs, np.float32).reshape(-1, 3)
    n = len(origins)
    tmins = np.broadcast_to(np.asarray(tmin, np.float32), (n,)).copy()
    tmaxs = np.broadcast_to(np.asarray(tmax, np.float32), (n,)).copy()
    return origins, dirs, tmins, tmaxs, n


class TwoLevelAccel:
    def __init__(self, compiled: CompiledScene):
        self.c = compiled

    @classmethod
    def from_scene(cls, scene: SceneDesc,
                   segments_per_span: int = DEFAULT_SEGMENTS_PER_SPAN) -> "TwoLevelAccel":
        return cls(compile_scene(scene, segments_per_span))

    def _finish(self, origins, dirs, out_t, out_inst, out_geom, out_prim,
                out_half, out_u, out_v, out_tri, out_steps) -> HitBatch:
        c = self.c
        n = len(origins)
        hit = out_t >= 0.0
        tri = np.where(hit, out_tri, 0)
        mat = np.where(hit, c.tri_info[tri, 3], -1).astype(np.int32)

        # quad halves map barycentrics to bilinear patch coordinates
        u = out_u.astype(np.float32)
        v = out_v.astype(np.float32)
        a_half = out_half == QUAD_HALF_A
        b_half = out_half == QUAD_HALF_B
        s = np.where(a_half, u + v, np.where(b_half, u, u))
        t = np.where(a_half, v, np.where(b_half, u + v, v))

        pos = origins.astype(np.float32) + out_t[:, None] * dirs.astype(np.float32)
        pos[~hit] = 0.0

        n_obj = np.cross(c.tri_e1[tri].astype(np.float64),
                         c.tri_e2[tri].astype(np.float64))
        nrm = c.inst_nrm[np.where(hit, out_inst, 0)].reshape(n, 3, 3).astype(np.float64)
        n_world = np.einsum("nij,nj->ni", nrm, n_obj)
        length = np.linalg.norm(n_world, axis=1, keepdims=True)
        n_world = n_world / np.maximum(length, 1e-30)
        n_world[~hit] = 0.0

        return HitBatch(t=out_t, instance_id=out_inst, geom_id=out_geom,
                        prim_id=out_prim, u=s.astype(np.float32),
                        v=t.astype(np.float32), material_id=mat,
                        position=pos.astype(np.float32),
                        normal=n_world.astype(np.float32), steps=out_steps)

    def intersect(self, origins, dirs, tmin=1e-4, tmax=np.inf) -> HitBatch:
        return self.finish_hits(self.intersect_raw(origins, dirs, tmin, tmax))

    def intersect_raw(self, origins, dirs, tmin=1e-4, tmax=np.inf) -> tuple:
        """Traversal only; pair with `finish_hits` (lets callers time the two
        phases separately)."""
        origins, dirs, tmins, tmaxs, n = _prep_rays(origins, dirs, tmin, tmax)
        c = self.c
        out_t = np.empty(n, np.float32)
        out_inst = np.empty(n, np.int32)
        out_geom = np.empty(n, np.int32)
        out_prim = np.empty(n, np.int32)
        out_half = np.empty(n, np.int32)
        out_u = np.empty(n, np.float32)
        out_v = np.empty(n, np.float32)
        out_tri = np.empty(n, np.int32)
        out_steps = np.empty(n, np.int32)
        kernels.two_level_intersect(
            origins, dirs, tmins, tmaxs,
            c.tlas_bounds, c.tlas_meta, c.tlas_order,
            c.inst_obj, c.inst_inv, c.obj_root,
            c.blas_bounds, c.blas_meta,
            c.tri_v0, c.tri_e1, c.tri_e2, c.tri_info,
            out_t, out_inst, out_geom, out_prim, out_half,
            out_u, out_v, out_tri, out_steps)
        return (origins, dirs, out_t, out_inst, out_geom, out_prim,
                out_half, out_u, out_v, out_tri, out_steps)

    def finish_hits(self, raw: tuple) -> HitBatch:
        return self._finish(*raw)

    def occluded(self, origins, dirs, tmin=1e-4, tmax=np.inf) -> np.ndarray:
        origins, dirs, tmins, tmaxs, n = _prep_rays(origins, dirs, tmin, tmax)
        c = self.c
        out_hit = np.empty(n, np.bool_)
        kernels.two_level_occluded(
            origins, dirs, tmins, tmaxs,
            c.tlas_bounds, c.tlas_meta, c.tlas_order,
            c.inst_obj, c.inst_inv, c.obj_root,
            c.blas_bounds, c.blas_meta,
            c.tri_v0, c.tri_e1, c.tri_e2, c.tri_info, out_hit)
        return out_hit

    def brute_force_intersect(self, origins, dirs, tmin=1e-4, tmax=np.inf) -> HitBatch:
        origins, dirs, tmins, tmaxs, n = _prep_rays(origins, dirs, tmin, tmax)
        c = self.c
        out_t = np.empty(n, np.float32)
        out_inst = np.empty(n, np.int32)
        out_geom = np.empty(n, np.int32)
        out_prim = np.empty(n, np.int32)
        out_half = np.empty(n, np.int32)
        out_u = np.empty(n, np.float32)
        out_v = np.empty(n, np.float32)
        out_tri = np.empty(n, np.int32)
        kernels.brute_force_intersect(
            origins, dirs, tmins, tmaxs,
            c.inst_obj, c.inst_inv, c.obj_tri_start, c.obj_tri_end,
            c.tri_v0, c.tri_e1, c.tri_e2, c.tri_info,
            out_t, out_inst, out_geom, out_prim, out_half,
            out_u, out_v, out_tri)
        return self._finish(origins, dirs, out_t, out_inst, out_geom, out_prim,
                            out_half, out_u, out_v, out_tri,
                            np.zeros(n, np.int32))
