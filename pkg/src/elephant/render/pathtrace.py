"""Wavefront path tracer: NEE at every vertex, MIS (power heuristic, beta=2),
Russian roulette from the third bounce, firefly guard.

Vectorized over a batch of paths (typically one tile's pixels for one sample
index). All randomness comes from the counter-based sampler, so a path's
result depends only on (seed, pixel, global sample index) — never on the
batch it happens to be traced in.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..shade import disney
from ..shade.lights import (ENV_PDF, eval_environment, quad_normal_area,
                            sample_environment, sample_quad_light)
from . import sampler as smp
from .context import RenderContext, emissive_lookup

RR_START_DEPTH = 3
RR_MIN_SURVIVAL = 0.05
RR_MAX_SURVIVAL = 0.95
_LUM = np.array([0.2126, 0.7152, 0.0722])


@dataclass
class StageTimes:
    """Scoped per-thread accumulators for the profile categories."""
    traversal_intersect: float = 0.0
    post_intersect: float = 0.0
    texture: float = 0.0
    sample_shade: float = 0.0
    rays: int = 0
    firefly_clamps: int = 0

    def merge(self, other: "StageTimes"):
        self.traversal_intersect += other.traversal_intersect
        self.post_intersect += other.post_intersect
        self.texture += other.texture
        self.sample_shade += other.sample_shade
        self.rays += other.rays
        self.firefly_clamps += other.firefly_clamps


def _power_heuristic(pdf_a, pdf_b):
    a2 = pdf_a ** 2
    return a2 / np.maximum(a2 + pdf_b ** 2, 1e-300)


def _onb(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Branchless orthonormal basis around unit normals (n, 3)."""
    s = np.where(n[:, 2] >= 0.0, 1.0, -1.0)
    a = -1.0 / (s + n[:, 2])
    b = n[:, 0] * n[:, 1] * a
    t = np.stack([1.0 + s * n[:, 0] ** 2 * a, s * b, -s * n[:, 0]], axis=1)
    bt = np.stack([b, s + n[:, 1] ** 2 * a, -n[:, 1]], axis=1)
    return t, bt


def _to_local(v, t, bt, n):
    return np.stack([np.sum(v * t, axis=1), np.sum(v * bt, axis=1),
                     np.sum(v * n, axis=1)], axis=1)


def _to_world(v, t, bt, n):
    return v[:, 0:1] * t + v[:, 1:2] * bt + v[:, 2:3] * n


def _resolve_base_color(ctx: RenderContext, mat: disney.MaterialBatch,
                        mat_ids, prim_ids, u, v, times: StageTimes):
    """Replace base color with face-texture lookups where bound."""
    if ctx.texture_cache is None or not ctx.scene.materials:
        return
    tex_ref = np.array([m.texture_ref for m in ctx.scene.materials], np.int64)
    refs = tex_ref[np.clip(mat_ids, 0, len(tex_ref) - 1)]
    textured = refs >= 0
    if not textured.any():
        return
    t0 = time.perf_counter()
    for ref in np.unique(refs[textured]):
        sel = refs == ref
        path = ctx.texture_paths[int(ref)]
        rgb = ctx.texture_cache.sample(path, prim_ids[sel], u[sel], v[sel])
        if rgb.shape[1] == 1:
            rgb = np.repeat(rgb, 3, axis=1)
        mat.base_color[sel] = rgb
    times.texture += time.perf_counter() - t0


def _sample_nee(ctx: RenderContext, pos, u3):
    """One uniformly chosen light strategy per path.

    Returns (wi, dist, radiance, pdf) where pdf already includes the 1/N
    strategy-choice factor."""
    n = len(pos)
    n_strat = ctx.n_light_strategies
    wi = np.zeros((n, 3))
    dist = np.zeros(n)
    rad = np.zeros((n, 3))
    pdf = np.zeros(n)
    pick = np.minimum((u3[:, 0] * n_strat).astype(np.int64), n_strat - 1)
    for li, light in enumerate(ctx.quad_lights):
        sel = pick == li
        if not sel.any():
            continue
        s = sample_quad_light(light, pos[sel], u3[sel, 1:3])
        wi[sel] = s.direction
        dist[sel] = s.distance
        rad[sel] = s.radiance
        pdf[sel] = s.pdf / n_strat
    if ctx.env_light is not None:
        sel = pick == len(ctx.quad_lights)
        if sel.any():
            s = sample_environment(ctx.env_light, int(sel.sum()), u3[sel, 1:3])
            wi[sel] = s.direction
            dist[sel] = s.distance
            rad[sel] = s.radiance
            pdf[sel] = s.pdf / n_strat
    return wi, dist, rad, pdf


def trace_paths(ctx: RenderContext, origins, dirs, px, py, gsi,
                max_depth: int, seed: int, times: StageTimes):
    """Trace one path per input ray.

    Returns (radiance (n,3), albedo (n,3), normal (n,3), rays_used (n,))."""
    n = len(origins)
    radiance = np.zeros((n, 3))
    first_albedo = np.zeros((n, 3))
    first_normal = np.zeros((n, 3))
    rays_used = np.zeros(n, np.int64)

    idx = np.arange(n)
    o = np.asarray(origins, np.float64).copy()
    d = np.asarray(dirs, np.float64).copy()
    throughput = np.ones((n, 3))
    prev_pdf = np.zeros(n)  # bsdf pdf of the segment that produced this ray
    n_strat = ctx.n_light_strategies

    for depth in range(max_depth):
        if len(idx) == 0:
            break
        t0 = time.perf_counter()
        raw = ctx.accel.intersect_raw(o[idx], d[idx])
        times.traversal_intersect += time.perf_counter() - t0
        times.rays += len(idx)
        rays_used[idx] += 1

        t0 = time.perf_counter()
        hit = ctx.accel.finish_hits(raw)
        times.post_intersect += time.perf_counter() - t0

        t0 = time.perf_counter()
        miss = ~hit.hit_mask
        if miss.any() and ctx.env_light is not None:
            env = eval_environment(ctx.env_light, d[idx[miss]])
            if depth == 0:
                w = np.ones(int(miss.sum()))
            else:
                w = _power_heuristic(prev_pdf[idx[miss]], ENV_PDF / n_strat)
            radiance[idx[miss]] += throughput[idx[miss]] * env * w[:, None]
        if miss.any() and depth == 0 and ctx.env_light is not None:
            first_albedo[idx[miss]] = eval_environment(ctx.env_light, d[idx[miss]])

        hm = hit.hit_mask
        alive = idx[hm]
        if len(alive) == 0:
            break
        hpos = hit.position[hm].astype(np.float64)
        hnrm = hit.normal[hm].astype(np.float64)
        wo_world = -d[alive]
        facing = np.sum(hnrm * wo_world, axis=1)
        ns = np.where(facing[:, None] < 0.0, -hnrm, hnrm)  # shade on wo's side

        # emitted light at the hit (front faces only), MIS against NEE
        lid = emissive_lookup(ctx, hit.instance_id[hm], hit.geom_id[hm],
                              hit.prim_id[hm])
        for li in np.unique(lid[lid >= 0]):
            light = ctx.quad_lights[int(li)]
            sel = lid == li
            front = facing[sel] > 0.0
            if not front.any():
                continue
            _, area = quad_normal_area(light.corners)
            t_hit = hit.t[hm][sel][front].astype(np.float64)
            cos_l = np.abs(facing[sel][front])
            if depth == 0:
                w = np.ones(len(t_hit))
            else:
                p_nee = t_hit ** 2 / np.maximum(area * cos_l, 1e-20) / n_strat
                w = _power_heuristic(prev_pdf[alive[sel][front]], p_nee)
            radiance[alive[sel][front]] += (throughput[alive[sel][front]]
                                            * light.radiance.astype(np.float64)
                                            * w[:, None])
        times.sample_shade += time.perf_counter() - t0

        # material resolution (texture lookups timed separately)
        mat = disney.MaterialBatch.from_materials(ctx.scene.materials,
                                                  hit.material_id[hm])
        _resolve_base_color(ctx, mat, hit.material_id[hm], hit.prim_id[hm],
                            hit.u[hm].astype(np.float64),
                            hit.v[hm].astype(np.float64), times)

        t0 = time.perf_counter()
        if depth == 0:
            first_albedo[alive] = mat.base_color
            first_normal[alive] = ns

        tb, bb = _onb(ns)
        wo = _to_local(wo_world, tb, bb, ns)
        wo[:, 2] = np.maximum(wo[:, 2], 1e-6)
        eps = 1e-4 * np.maximum(1.0, np.linalg.norm(hpos, axis=1))
        shadow_org = hpos + ns * eps[:, None]

        # next-event estimation
        if n_strat > 0:
            pxa, pya, ga = px[alive], py[alive], gsi[alive]
            u_nee = np.stack([
                smp.sample_1d(seed, pxa, pya, ga, smp.bounce_dim(depth, smp.DIM_LIGHT_PICK)),
                smp.sample_1d(seed, pxa, pya, ga, smp.bounce_dim(depth, smp.DIM_LIGHT_U)),
                smp.sample_1d(seed, pxa, pya, ga, smp.bounce_dim(depth, smp.DIM_LIGHT_V)),
            ], axis=1)
            lwi, ldist, lrad, lpdf = _sample_nee(ctx, hpos, u_nee)
            wi_l = _to_local(lwi, tb, bb, ns)
            f_l, pdf_b = disney.evaluate(wo, wi_l, mat)
            potential = ((lrad.sum(axis=1) > 0.0) & (lpdf > 1e-20)
                         & (wi_l[:, 2] > 0.0) & (f_l.sum(axis=1) > 0.0))
            times.sample_shade += time.perf_counter() - t0
            if potential.any():
                t0 = time.perf_counter()
                tmax = np.where(np.isinf(ldist[potential]), np.inf,
                                ldist[potential] * (1.0 - 1e-3))
                blocked = ctx.accel.occluded(shadow_org[potential],
                                             lwi[potential], tmin=0.0, tmax=tmax)
                times.traversal_intersect += time.perf_counter() - t0
                times.rays += int(potential.sum())
                rays_used[alive[potential]] += 1
                t0 = time.perf_counter()
                vis = ~blocked
                tgt = alive[potential][vis]
                w_mis = _power_heuristic(lpdf[potential][vis],
                                         pdf_b[potential][vis])
                contrib = (throughput[tgt] * f_l[potential][vis]
                           * lrad[potential][vis]
                           * (wi_l[potential, 2][vis] * w_mis
                              / lpdf[potential][vis])[:, None])
                radiance[tgt] += contrib
                times.sample_shade += time.perf_counter() - t0
        if depth == max_depth - 1:
            break

        t0 = time.perf_counter()
        # scatter
        pxa, pya, ga = px[alive], py[alive], gsi[alive]
        u_b = np.stack([
            smp.sample_1d(seed, pxa, pya, ga, smp.bounce_dim(depth, smp.DIM_LOBE)),
            smp.sample_1d(seed, pxa, pya, ga, smp.bounce_dim(depth, smp.DIM_BSDF_U)),
            smp.sample_1d(seed, pxa, pya, ga, smp.bounce_dim(depth, smp.DIM_BSDF_V)),
        ], axis=1)
        wi, f, pdf, _lobe = disney.sample(wo, mat, u_b)
        cos_i = wi[:, 2]
        ok = (pdf > 1e-12) & (cos_i > 1e-7) & np.isfinite(f).all(axis=1)
        new_tp = np.where(ok[:, None],
                          throughput[alive] * f * (cos_i / np.maximum(pdf, 1e-300))[:, None],
                          0.0)

        # Russian roulette on the path's remaining throughput
        if depth + 1 >= RR_START_DEPTH:
            survival = np.clip(new_tp @ _LUM, RR_MIN_SURVIVAL, RR_MAX_SURVIVAL)
            u_rr = smp.sample_1d(seed, pxa, pya, ga,
                                 smp.bounce_dim(depth, smp.DIM_RR))
            ok &= u_rr < survival
            new_tp = new_tp / survival[:, None]

        cont = ok & (new_tp.sum(axis=1) > 0.0)
        nxt = alive[cont]
        throughput[nxt] = new_tp[cont]
        o[nxt] = hpos[cont] + ns[cont] * (1e-4 * np.maximum(
            1.0, np.linalg.norm(hpos[cont], axis=1)))[:, None]
        d[nxt] = _to_world(wi[cont], tb[cont], bb[cont], ns[cont])
        prev_pdf[nxt] = pdf[cont]
        idx = nxt
        times.sample_shade += time.perf_counter() - t0

    bad = ~np.isfinite(radiance).all(axis=1)
    if bad.any():
        radiance[bad] = 0.0
        times.firefly_clamps += int(bad.sum())
    return radiance, first_albedo, first_normal, rays_used
