"""Frame orchestration: tile-parallel rendering, debug shading modes,
per-category profiling, and display conversion."""
from __future__ import annotations

import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .context import RenderContext, camera_rays
from .framebuffer import FrameBuffer, Tile
from .pathtrace import StageTimes, trace_paths
from . import sampler as smp
from .tonemap import tonemap_for_display

CATEGORIES = ("traversal_intersect", "post_intersect", "texture",
              "sample_shade", "other")


class RenderMode(enum.Enum):
    PATH_TRACE = "pathtrace"
    PRIM_ID = "primid"
    GEOM_ID = "geomid"
    INSTANCE_ID = "instanceid"
    COST_HEAT = "costheat"
    ALBEDO = "albedo"
    NORMAL = "normal"


@dataclass
class RenderConfig:
    max_path_depth: int = 5
    samples_per_frame: int = 1
    mode: RenderMode = RenderMode.PATH_TRACE
    deterministic: bool = True
    seed: int = 0
    exposure: float = 1.0

    def __post_init__(self):
        if self.max_path_depth < 1:
            raise ValueError("max_path_depth must be >= 1")
        self.mode = RenderMode(self.mode)


@dataclass
class RenderStats:
    shares: dict = field(default_factory=dict)  # category -> fraction
    rays_traced: int = 0
    rays_per_pixel: float = 0.0
    frame_millis: float = 0.0
    firefly_clamps: int = 0

    def validate(self):
        total = sum(self.shares.values())
        if abs(total - 1.0) > 0.005:
            raise ValueError(f"category shares sum to {total}")
        if any(v < 0 for v in self.shares.values()):
            raise ValueError("negative category share")

    @classmethod
    def from_times(cls, times: StageTimes, wall_seconds: float,
                   pixel_count: int) -> "RenderStats":
        cats = {"traversal_intersect": times.traversal_intersect,
                "post_intersect": times.post_intersect,
                "texture": times.texture,
                "sample_shade": times.sample_shade}
        busy = sum(cats.values())
        if busy <= wall_seconds:
            cats["other"] = wall_seconds - busy
            denom = wall_seconds
        else:
            # thread-summed busy time exceeds wall; report relative shares
            cats["other"] = 0.0
            denom = busy
        denom = max(denom, 1e-12)
        return cls(shares={k: v / denom for k, v in cats.items()},
                   rays_traced=times.rays,
                   rays_per_pixel=times.rays / max(pixel_count, 1),
                   frame_millis=wall_seconds * 1000.0,
                   firefly_clamps=times.firefly_clamps)


def hash_color(ids: np.ndarray) -> np.ndarray:
    """Stable pseudo-color per id."""
    ids = np.asarray(ids, np.uint64)
    r = smp.sample_1d(1, ids, 0, 0, 0)
    g = smp.sample_1d(2, ids, 0, 0, 0)
    b = smp.sample_1d(3, ids, 0, 0, 0)
    return 0.1 + 0.85 * np.stack([r, g, b], axis=-1)


MISS_GRAY = 0.1


def debug_shade(hit, mode: RenderMode) -> np.ndarray:
    ids = {RenderMode.PRIM_ID: hit.prim_id,
           RenderMode.GEOM_ID: hit.geom_id,
           RenderMode.INSTANCE_ID: hit.instance_id}[mode]
    color = hash_color(np.maximum(ids, 0))
    return np.where(hit.hit_mask[:, None], color, MISS_GRAY)


def _render_tile(ctx: RenderContext, fb: FrameBuffer, tile: Tile,
                 config: RenderConfig, frame_index: int) -> StageTimes:
    times = StageTimes()
    ys, xs = np.mgrid[tile.y0:tile.y0 + tile.h, tile.x0:tile.x0 + tile.w]
    px = xs.ravel()
    py = ys.ravel()
    shape3 = (tile.h, tile.w, 3)
    mode = config.mode

    if mode in (RenderMode.PATH_TRACE, RenderMode.COST_HEAT):
        spp = config.samples_per_frame
        for s in range(spp):
            gsi = np.full(len(px), frame_index * spp + s, np.uint64)
            jx = smp.sample_1d(config.seed, px, py, gsi, smp.DIM_PIXEL_X)
            jy = smp.sample_1d(config.seed, px, py, gsi, smp.DIM_PIXEL_Y)
            o, d = camera_rays(ctx.scene, px, py, jx, jy, fb.width, fb.height)
            rad, alb, nrm, rays = trace_paths(ctx, o, d, px, py, gsi,
                                              config.max_path_depth,
                                              config.seed, times)
            fb.add_tile(tile, rad.reshape(shape3), alb.reshape(shape3),
                        nrm.reshape(shape3), rays.reshape(tile.h, tile.w), 1)
        return times

    # debug modes: one centered primary ray per pixel
    o, d = camera_rays(ctx.scene, px, py, 0.5, 0.5, fb.width, fb.height)
    t0 = time.perf_counter()
    raw = ctx.accel.intersect_raw(o, d)
    times.traversal_intersect += time.perf_counter() - t0
    times.rays += len(px)
    t0 = time.perf_counter()
    hit = ctx.accel.finish_hits(raw)
    times.post_intersect += time.perf_counter() - t0

    t0 = time.perf_counter()
    if mode in (RenderMode.PRIM_ID, RenderMode.GEOM_ID, RenderMode.INSTANCE_ID):
        color = debug_shade(hit, mode)
        albedo = color
        normal = np.where(hit.hit_mask[:, None], hit.normal.astype(np.float64), 0.0)
    else:
        from ..shade.disney import MaterialBatch
        from .pathtrace import _resolve_base_color
        mat = MaterialBatch.from_materials(ctx.scene.materials, hit.material_id)
        _resolve_base_color(ctx, mat, hit.material_id, hit.prim_id,
                            hit.u.astype(np.float64), hit.v.astype(np.float64),
                            times)
        albedo = np.where(hit.hit_mask[:, None], mat.base_color, 0.0)
        normal = np.where(hit.hit_mask[:, None], hit.normal.astype(np.float64), 0.0)
        color = albedo if mode == RenderMode.ALBEDO else 0.5 * (normal + 1.0)
    times.sample_shade += time.perf_counter() - t0
    fb.add_tile(tile, color.reshape(shape3), albedo.reshape(shape3),
                normal.reshape(shape3), np.ones((tile.h, tile.w), np.int64), 1)
    return times


def render_frame(ctx: RenderContext, fb: FrameBuffer, config: RenderConfig,
                 frame_index: int, threads: int = 1,
                 tiles: list[Tile] | None = None) -> RenderStats:
    """Render every tile exactly once; disjoint tile writes make the result
    independent of scheduling. `tiles` restricts to a subset (tile owners in
    the distributed setup)."""
    wall0 = time.perf_counter()
    work = fb.tiles if tiles is None else tiles
    total = StageTimes()
    if threads <= 1:
        for tile in work:
            total.merge(_render_tile(ctx, fb, tile, config, frame_index))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for t in pool.map(lambda tile: _render_tile(ctx, fb, tile, config,
                                                        frame_index), work):
                total.merge(t)
    wall = time.perf_counter() - wall0
    stats = RenderStats.from_times(total, wall, fb.width * fb.height)
    stats.validate()
    return stats


def _cost_heat_image(fb: FrameBuffer) -> np.ndarray:
    cost = fb.cost / np.maximum(fb.sample_count, 1)
    hi = max(float(cost.max()), 1e-12)
    v = (cost / hi) ** 0.5  # dark (low) to light (high)
    return np.clip(np.rint(np.stack([v * 255, v * 220, v * 160], axis=-1)),
                   0, 255).astype(np.uint8)


def frame_image(fb: FrameBuffer, mode: RenderMode = RenderMode.PATH_TRACE,
                exposure: float = 1.0,
                color_override: np.ndarray | None = None) -> np.ndarray:
    """Convert accumulated state to an 8-bit display image."""
    if mode == RenderMode.COST_HEAT:
        return _cost_heat_image(fb)
    color = color_override if color_override is not None else fb.mean_color()
    if mode == RenderMode.PATH_TRACE:
        return tonemap_for_display(color, exposure)
    return np.clip(np.rint(np.asarray(color) * 255.0), 0, 255).astype(np.uint8)
