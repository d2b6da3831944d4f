"""Plain-text and figure output for benchmark runs."""
from __future__ import annotations

import json

from ..render import CATEGORIES
from .bench import BenchReport


def format_report(report: BenchReport) -> str:
    """Aligned summary table followed by machine-greppable key=value lines."""
    rows = [
        ("scene", report.scene_id),
        ("resolution", f"{report.width}x{report.height}"),
        ("warmup frames", str(report.warmup_frames)),
        ("measured frames", str(report.measured_frames)),
        ("mean frame", f"{report.mean_ms:.2f} ms"),
        ("median frame", f"{report.median_ms:.2f} ms"),
        ("min frame", f"{report.min_ms:.2f} ms"),
        ("Mray/s", f"{report.mray_per_s:.2f}"),
        ("rays/pixel", f"{report.rays_per_pixel:.2f}"),
        ("denoise", f"{report.denoise_ms:.2f} ms"),
    ]
    for c in CATEGORIES:
        rows.append((f"share {c}", f"{100.0 * report.shares.get(c, 0.0):.2f} %"))
    key_w = max(len(k) for k, _ in rows)
    val_w = max(len(v) for _, v in rows)
    lines = ["+" + "-" * (key_w + val_w + 5) + "+"]
    for k, v in rows:
        lines.append(f"| {k.ljust(key_w)} | {v.rjust(val_w)} |")
    lines.append(lines[0])

    kv = {
        "scene": report.scene_id,
        "width": report.width, "height": report.height,
        "warmupFrames": report.warmup_frames,
        "measuredFrames": report.measured_frames,
        "meanFrameMillis": f"{report.mean_ms:.6f}",
        "medianFrameMillis": f"{report.median_ms:.6f}",
        "minFrameMillis": f"{report.min_ms:.6f}",
        "mraysPerSecond": f"{report.mray_per_s:.6f}",
        "raysPerPixel": f"{report.rays_per_pixel:.6f}",
        "raysTraced": report.rays_traced,
        "denoiseMillis": f"{report.denoise_ms:.6f}",
        "textureLookups": report.texture_lookups,
        "textureHitRate": f"{report.texture_hit_rate:.6f}",
    }
    for c in CATEGORIES:
        kv[f"share.{c}"] = f"{report.shares.get(c, 0.0):.6f}"
    lines.extend(f"{k}={v}" for k, v in kv.items())
    return "\n".join(lines)


def report_json(report: BenchReport) -> str:
    return json.dumps({
        "scene": report.scene_id,
        "resolution": [report.width, report.height],
        "warmupFrames": report.warmup_frames,
        "measuredFrames": report.measured_frames,
        "meanFrameMillis": report.mean_ms,
        "medianFrameMillis": report.median_ms,
        "minFrameMillis": report.min_ms,
        "mraysPerSecond": report.mray_per_s,
        "raysPerPixel": report.rays_per_pixel,
        "raysTraced": report.rays_traced,
        "denoiseMillis": report.denoise_ms,
        "shares": report.shares,
        "frameMillis": report.all_frame_ms,
        "textureLookups": report.texture_lookups,
        "textureHitRate": report.texture_hit_rate,
    }, indent=2)


def report_profile(stats_list, names=None) -> str:
    """Percent compute-time breakdown, categories as rows and scenes as
    columns, two decimals."""
    if not stats_list:
        raise ValueError("need at least one stats entry")
    if names is None:
        names = [f"scene{i}" for i in range(len(stats_list))]
    shares = [s.shares if hasattr(s, "shares") else s for s in stats_list]
    label_w = max(len(c) for c in CATEGORIES)
    col_ws = [max(len(n), 7) for n in names]
    header = " ".join(["category".ljust(label_w)]
                      + [n.rjust(w) for n, w in zip(names, col_ws)])
    lines = [header, "-" * len(header)]
    for c in CATEGORIES:
        cells = [f"{100.0 * sh.get(c, 0.0):.2f}".rjust(w)
                 for sh, w in zip(shares, col_ws)]
        lines.append(" ".join([c.ljust(label_w)] + cells))
    return "\n".join(lines)


def write_figures(report: BenchReport, out_prefix: str) -> list[str]:
    """Frame-time series and category-share chart next to the text output."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []

    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(report.all_frame_ms, lw=1.0)
    ax.axvline(report.warmup_frames - 0.5, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("frame")
    ax.set_ylabel("frame time (ms)")
    ax.set_title(f"{report.scene_id}: frame times "
                 f"(warm-up left of dashed line)")
    fig.tight_layout()
    p = f"{out_prefix}_frametimes.png"
    fig.savefig(p, dpi=110)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    cats = list(CATEGORIES)
    vals = [100.0 * report.shares.get(c, 0.0) for c in cats]
    ax.barh(cats, vals)
    ax.set_xlabel("share of frame time (%)")
    ax.set_title(f"{report.scene_id}: compute-time breakdown")
    fig.tight_layout()
    p = f"{out_prefix}_shares.png"
    fig.savefig(p, dpi=110)
    plt.close(fig)
    paths.append(p)
    return paths
