"""Render benchmark: warm-up frames, steady-state timing, per-category
breakdown, and rays-per-pixel, on any loaded or generated scene."""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

from ..render import (CATEGORIES, FrameBuffer, RenderConfig, denoise,
                      render_frame)
from ..render.context import build_context
from ..shade.facetex import FaceTextureCache

DEFAULT_WIDTH = 1536
DEFAULT_HEIGHT = 644
DEFAULT_DEPTH = 5
DEFAULT_WARMUP = 64
DEFAULT_MEASURE = 64
DEFAULT_HANDLE_CAP = 100  # texture cache: unlimited bytes, 100 open files


@dataclass
class BenchReport:
    scene_id: str
    width: int
    height: int
    warmup_frames: int
    measured_frames: int
    mean_ms: float
    median_ms: float
    min_ms: float
    mray_per_s: float
    rays_per_pixel: float
    shares: dict
    denoise_ms: float
    rays_traced: int                 # total over measured frames
    all_frame_ms: list = field(default_factory=list)  # warmup + measured
    texture_lookups: int = 0
    texture_hit_rate: float = 0.0

    def warm_frame_mean_ms(self, first_n: int = 5) -> float:
        return statistics.fmean(self.all_frame_ms[:first_n])


def bench(scene, config: RenderConfig | None = None,
          warmup: int = DEFAULT_WARMUP, measure: int = DEFAULT_MEASURE,
          width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT,
          threads: int = 1, scene_id: str = "scene", base_dir: str = ".",
          run_denoise: bool = False,
          texture_cache: FaceTextureCache | None = None) -> BenchReport:
    if measure < 1:
        raise ValueError("need at least one measured frame")
    if config is None:
        config = RenderConfig(max_path_depth=DEFAULT_DEPTH)
    if texture_cache is None:
        texture_cache = FaceTextureCache(byte_budget=None,
                                         open_handle_cap=DEFAULT_HANDLE_CAP)
    ctx = build_context(scene, base_dir=base_dir, texture_cache=texture_cache)
    fb = FrameBuffer(width, height)

    all_ms: list[float] = []
    measured_ms: list[float] = []
    rays_total = 0
    share_sums = {c: 0.0 for c in CATEGORIES}
    for f in range(warmup + measure):
        t0 = time.perf_counter()
        stats = render_frame(ctx, fb, config, f, threads=threads)
        ms = (time.perf_counter() - t0) * 1000.0
        all_ms.append(ms)
        if f >= warmup:
            measured_ms.append(ms)
            rays_total += stats.rays_traced
            for c in CATEGORIES:
                share_sums[c] += stats.shares.get(c, 0.0)

    shares = {c: v / measure for c, v in share_sums.items()}
    total = sum(shares.values())
    if total > 0:
        shares = {c: v / total for c, v in shares.items()}

    denoise_ms = 0.0
    if run_denoise:
        spp = (warmup + measure) * config.samples_per_frame
        t0 = time.perf_counter()
        denoise(fb.mean_color(), fb.mean_albedo(), fb.mean_normal(), spp)
        denoise_ms = (time.perf_counter() - t0) * 1000.0

    mean_s = statistics.fmean(measured_ms) / 1000.0
    rays_per_frame = rays_total / measure
    cache = ctx.texture_cache
    return BenchReport(
        scene_id=scene_id, width=width, height=height,
        warmup_frames=warmup, measured_frames=measure,
        mean_ms=statistics.fmean(measured_ms),
        median_ms=statistics.median(measured_ms),
        min_ms=min(measured_ms),
        mray_per_s=rays_per_frame / (mean_s * 1e6),
        rays_per_pixel=rays_per_frame / (width * height),
        shares=shares, denoise_ms=denoise_ms, rays_traced=rays_total,
        all_frame_ms=all_ms,
        texture_lookups=cache.lookups if cache else 0,
        texture_hit_rate=(cache.hits / cache.lookups
                          if cache and cache.lookups else 0.0))
