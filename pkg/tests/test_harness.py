"""Benchmark harness: timing report arithmetic, profiles, and figures."""
import json
import os

import numpy as np
import pytest

from elephant.harness.bench import (DEFAULT_DEPTH, DEFAULT_HEIGHT,
                                    DEFAULT_MEASURE, DEFAULT_WARMUP,
                                    DEFAULT_WIDTH, BenchReport, bench)
from elephant.harness.report import (format_report, report_json,
                                     report_profile, write_figures)
from elephant.render import RenderConfig, RenderStats


@pytest.fixture(scope="module")
def small_bench(mini_scene):
    scene, _ = mini_scene
    config = RenderConfig(max_path_depth=3, samples_per_frame=1, seed=3)
    return bench(scene, config, warmup=2, measure=3, width=64, height=48,
                 scene_id="mini")


class TestDefaults:
    def test_interactive_target_shape(self):
        assert (DEFAULT_WIDTH, DEFAULT_HEIGHT) == (1536, 644)
        assert DEFAULT_DEPTH == 5
        assert DEFAULT_WARMUP == 64 and DEFAULT_MEASURE == 64


class TestBench:
    def test_shares_sum_to_one(self, small_bench):
        total = sum(small_bench.shares.values())
        assert abs(total - 1.0) <= 0.005

    def test_frame_bookkeeping(self, small_bench):
        r = small_bench
        assert r.warmup_frames == 2 and r.measured_frames == 3
        assert len(r.all_frame_ms) == 5
        assert r.min_ms <= r.median_ms
        assert r.min_ms <= r.mean_ms
        assert r.mean_ms == pytest.approx(
            np.mean(r.all_frame_ms[2:]), rel=1e-9)

    def test_throughput_arithmetic(self, small_bench):
        r = small_bench
        rays_per_frame = r.rays_traced / r.measured_frames
        assert r.mray_per_s == pytest.approx(
            rays_per_frame / (r.mean_ms / 1000.0) / 1e6, rel=1e-9)
        assert r.rays_per_pixel == pytest.approx(
            rays_per_frame / (r.width * r.height), rel=1e-9)

    def test_rays_deterministic_across_runs(self, mini_scene):
        scene, _ = mini_scene
        config = RenderConfig(max_path_depth=3, samples_per_frame=1, seed=3)
        a = bench(scene, config, warmup=1, measure=2, width=48, height=48)
        b = bench(scene, config, warmup=1, measure=2, width=48, height=48)
        assert a.rays_traced == b.rays_traced
        assert a.rays_per_pixel == b.rays_per_pixel

    def test_measure_required(self, mini_scene):
        with pytest.raises(ValueError):
            bench(mini_scene[0], warmup=0, measure=0, width=32, height=32)

    def test_denoise_timing(self, mini_scene):
        scene, _ = mini_scene
        config = RenderConfig(max_path_depth=2, samples_per_frame=1)
        r = bench(scene, config, warmup=1, measure=1, width=48, height=48,
                  run_denoise=True)
        assert r.denoise_ms is not None and r.denoise_ms > 0

    def test_texture_counters(self, textured_scene):
        scene, base_dir = textured_scene
        config = RenderConfig(max_path_depth=2, samples_per_frame=1)
        r = bench(scene, config, warmup=1, measure=1, width=48, height=48,
                  base_dir=base_dir)
        assert r.texture_lookups > 0
        assert 0.0 <= r.texture_hit_rate <= 1.0


class TestReport:
    def test_format_contains_keyvalues(self, small_bench):
        text = format_report(small_bench)
        kv = dict(line.split("=", 1) for line in text.splitlines()
                  if "=" in line and " " not in line.split("=")[0])
        assert kv["scene"] == "mini"
        assert float(kv["meanFrameMillis"]) == pytest.approx(
            small_bench.mean_ms, rel=1e-4)
        shares = [float(v) for k, v in kv.items() if k.startswith("share.")]
        assert sum(shares) == pytest.approx(1.0, abs=0.005)

    def test_json_roundtrip(self, small_bench):
        data = json.loads(report_json(small_bench))
        assert data["scene"] == "mini"
        assert data["measuredFrames"] == 3
        assert len(data["frameMillis"]) == 5

    def test_profile_columns(self):
        a = RenderStats(shares={"traversal_intersect": 0.70,
                                "post_intersect": 0.07, "texture": 0.02,
                                "sample_shade": 0.20, "other": 0.01})
        b = RenderStats(shares={"traversal_intersect": 0.25,
                                "post_intersect": 0.25, "texture": 0.25,
                                "sample_shade": 0.20, "other": 0.05})
        text = report_profile([a, b], names=["left", "right"])
        lines = text.splitlines()
        header = lines[0]
        assert header.index("left") < header.index("right")
        row = next(l for l in lines if l.startswith("traversal_intersect"))
        assert "70.00" in row and "25.00" in row

    def test_profile_empty_rejected(self):
        with pytest.raises(ValueError):
            report_profile([])

    def test_figures_written(self, small_bench, tmp_path):
        prefix = str(tmp_path / "out")
        files = write_figures(small_bench, prefix)
        assert sorted(os.path.basename(f) for f in files) == [
            "out_frametimes.png", "out_shares.png"]
        for f in files:
            assert os.path.getsize(f) > 1000


class TestWarmupEffect:
    def test_warm_frame_mean_accessor(self):
        r = BenchReport(scene_id="x", width=1, height=1, warmup_frames=3,
                        measured_frames=2, mean_ms=1.0, median_ms=1.0,
                        min_ms=1.0, mray_per_s=0.0, rays_per_pixel=0.0,
                        shares={}, denoise_ms=0.0, rays_traced=0,
                        all_frame_ms=[10.0, 8.0, 6.0, 1.0, 1.0])
        assert r.warm_frame_mean_ms(first_n=3) == pytest.approx(8.0)
