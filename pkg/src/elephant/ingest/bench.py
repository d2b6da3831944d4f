"""ASCII-vs-binary load benchmark."""
from __future__ import annotations

import time
from dataclasses import dataclass

from ..scene.stats import StatsReport, scene_stats
from .biff import read_biff_file
from .errors import MismatchedScenes
from .pbrt import parse_pbrt_file


@dataclass
class LoadReport:
    ascii_seconds: float
    binary_seconds: float
    speedup: float
    ascii_counts: StatsReport
    binary_counts: StatsReport


def _entity_counts(stats: StatsReport) -> tuple:
    return (stats.unique_objects, stats.unique_shapes, stats.unique_triangles,
            stats.unique_quads, stats.unique_curve_segments, stats.instance_count)


def bench_load(pbrt_path: str, biff_path: str) -> LoadReport:
    """Time parsing the same scene from ASCII and from BIFF; counts must match."""
    t0 = time.perf_counter()
    ascii_scene = parse_pbrt_file(pbrt_path)
    ascii_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    binary_scene = read_biff_file(biff_path)
    binary_seconds = time.perf_counter() - t0

    ascii_counts = scene_stats(ascii_scene)
    binary_counts = scene_stats(binary_scene)
    if _entity_counts(ascii_counts) != _entity_counts(binary_counts):
        raise MismatchedScenes(
            f"entity counts differ: ascii={_entity_counts(ascii_counts)} "
            f"biff={_entity_counts(binary_counts)}")
    return LoadReport(ascii_seconds=ascii_seconds, binary_seconds=binary_seconds,
                      speedup=ascii_seconds / max(binary_seconds, 1e-12),
                      ascii_counts=ascii_counts, binary_counts=binary_counts)
