"""Command-line entry points: convert, stats, gen, render, bench, serve,
worker."""
from __future__ import annotations

import io
import json
import os
import sys
import threading

import click
import numpy as np


def _load_scene(path: str):
    from .ingest.biff import read_biff_file
    from .ingest.pbrt import parse_pbrt_file

    if path.endswith(".pbrt"):
        return parse_pbrt_file(path)
    return read_biff_file(path)


def _parse_res(res: str) -> tuple[int, int]:
    try:
        w, h = res.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise click.BadParameter(f"resolution {res!r}, expected WxH")


def _parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise click.BadParameter(f"address {addr!r}, expected host:port")


@click.group()
def main():
    """Desk-scale production-style path tracer."""


@main.command()
@click.argument("in_pbrt", type=click.Path(exists=True))
@click.argument("out_biff", type=click.Path())
@click.option("--no-quad-merge", is_flag=True, default=False,
              help="Keep paired triangles as triangles.")
def convert(in_pbrt, out_biff, no_quad_merge):
    """Parse a PBRT-subset scene and write the binary sidecar."""
    from .ingest.biff import write_biff_file
    from .ingest.pbrt import parse_pbrt_file
    from .ingest.quadmerge import merge_scene_quads

    scene = parse_pbrt_file(in_pbrt)
    merged = 0
    if not no_quad_merge:
        merged = merge_scene_quads(scene)
    nbytes = write_biff_file(scene, out_biff)
    click.echo(f"wrote {out_biff} ({nbytes} bytes, {merged} meshes quad-merged)")


@main.command()
@click.argument("scene_path", type=click.Path(exists=True))
@click.option("--keyvalues", is_flag=True, default=False,
              help="Also print machine-readable key=value lines.")
def stats(scene_path, keyvalues):
    """Print entity counts and memory estimates for a scene."""
    from .scene.stats import scene_stats

    report = scene_stats(_load_scene(scene_path))
    click.echo(report.as_text())
    if keyvalues:
        click.echo(report.as_keyvalues())


@main.command()
@click.option("--preset", type=click.Choice(["mini", "overlap", "tessellation",
                                             "texture"]), default="mini")
@click.option("--seed", type=int, default=0)
@click.option("-o", "--output", required=True, type=click.Path())
def gen(preset, seed, output):
    """Generate a procedural challenge scene (and any textures it needs)."""
    from .ingest.biff import write_biff_file
    from .scene.generator import (PRESETS, generate_challenge_scene,
                                  write_scene_textures)

    scene, manifest = generate_challenge_scene(PRESETS[preset], seed)
    nbytes = write_biff_file(scene, output)
    tex = write_scene_textures(scene, os.path.dirname(output) or ".", seed)
    click.echo(f"wrote {output} ({nbytes} bytes): "
               f"{manifest.instance_count} instances, "
               f"{manifest.instanced_triangles} instanced triangles, "
               f"{len(tex)} texture files")


@main.command()
@click.argument("scene_path", type=click.Path(exists=True))
@click.option("--spp", type=int, default=16)
@click.option("--depth", type=int, default=5)
@click.option("--res", default=None, help="WxH, defaults to the scene camera.")
@click.option("--mode", type=click.Choice(["pathtrace", "primid", "geomid",
                                           "instanceid", "costheat", "albedo",
                                           "normal"]), default="pathtrace")
@click.option("--denoise", "use_denoise", is_flag=True, default=False)
@click.option("--deterministic/--no-deterministic", default=True)
@click.option("--seed", type=int, default=0)
@click.option("--threads", type=int, default=1)
@click.option("-o", "--output", default="out.png", type=click.Path())
@click.option("--dump-features", default=None,
              help="Prefix for 32-bit float PFM dumps of color/albedo/normal.")
def render(scene_path, spp, depth, res, mode, use_denoise, deterministic,
           seed, threads, output, dump_features):
    """Render a scene to an 8-bit sRGB PNG."""
    from PIL import Image

    from .render import (FrameBuffer, RenderConfig, RenderMode, denoise,
                         frame_image, render_frame, write_pfm)
    from .render.context import build_context

    scene = _load_scene(scene_path)
    w, h = _parse_res(res) if res else (scene.camera.width, scene.camera.height)
    config = RenderConfig(max_path_depth=depth, samples_per_frame=spp,
                          mode=RenderMode(mode), deterministic=deterministic,
                          seed=seed)
    ctx = build_context(scene, base_dir=os.path.dirname(scene_path) or ".")
    fb = FrameBuffer(w, h)
    stats = render_frame(ctx, fb, config, frame_index=0, threads=threads)

    color = fb.mean_color()
    if use_denoise and config.mode == RenderMode.PATH_TRACE:
        color = denoise(color, fb.mean_albedo(), fb.mean_normal(), spp)
    image = frame_image(fb, config.mode, color_override=color
                        if config.mode == RenderMode.PATH_TRACE else None)
    Image.fromarray(image, "RGB").save(output)
    if dump_features:
        write_pfm(f"{dump_features}_color.pfm", color)
        write_pfm(f"{dump_features}_albedo.pfm", fb.mean_albedo())
        write_pfm(f"{dump_features}_normal.pfm", fb.mean_normal())
    click.echo(f"wrote {output}: {w}x{h}, {spp} spp, "
               f"{stats.rays_per_pixel:.2f} rays/pixel, "
               f"{stats.frame_millis:.1f} ms")


@main.command()
@click.argument("scene_path", type=click.Path(exists=True), required=False)
@click.option("--preset", type=click.Choice(["mini", "overlap", "tessellation",
                                             "texture"]), default=None,
              help="Benchmark a generated preset instead of a scene file.")
@click.option("--seed", type=int, default=0)
@click.option("--warmup", type=int, default=None)
@click.option("--measure", type=int, default=None)
@click.option("--res", default=None, help="WxH (default 1536x644).")
@click.option("--depth", type=int, default=None)
@click.option("--workers", type=int, default=1,
              help="Render threads for the single-node run.")
@click.option("--spp", type=int, default=1)
@click.option("--traversal-only", is_flag=True, default=False,
              help="Primary-ray intersection only (id shading).")
@click.option("--json", "json_out", type=click.Path(), default=None)
@click.option("-o", "--out-prefix", default=None,
              help="Write report text and figures under this prefix.")
def bench(scene_path, preset, seed, warmup, measure, res, depth, workers,
          spp, traversal_only, json_out, out_prefix):
    """Benchmark steady-state render performance."""
    import tempfile

    from . import harness
    from .render import RenderConfig, RenderMode
    from .scene.generator import (PRESETS, generate_challenge_scene,
                                  write_scene_textures)

    if (scene_path is None) == (preset is None):
        raise click.UsageError("give a scene file or --preset, not both")
    base_dir = "."
    if preset:
        scene, _ = generate_challenge_scene(PRESETS[preset], seed)
        scene_id = f"preset:{preset}"
        if scene.textures:
            base_dir = tempfile.mkdtemp(prefix="bench_tex_")
            write_scene_textures(scene, base_dir, seed)
    else:
        scene = _load_scene(scene_path)
        scene_id = os.path.basename(scene_path)
        base_dir = os.path.dirname(scene_path) or "."

    w, h = _parse_res(res) if res else (harness.DEFAULT_WIDTH,
                                        harness.DEFAULT_HEIGHT)
    config = RenderConfig(
        max_path_depth=depth if depth is not None else harness.DEFAULT_DEPTH,
        samples_per_frame=spp,
        mode=RenderMode.PRIM_ID if traversal_only else RenderMode.PATH_TRACE)
    report = harness.bench(
        scene, config,
        warmup=warmup if warmup is not None else harness.DEFAULT_WARMUP,
        measure=measure if measure is not None else harness.DEFAULT_MEASURE,
        width=w, height=h, threads=workers, scene_id=scene_id,
        base_dir=base_dir, run_denoise=not traversal_only)

    text = harness.format_report(report)
    click.echo(text)
    if json_out:
        with open(json_out, "w") as f:
            f.write(harness.report_json(report))
    if out_prefix:
        with open(f"{out_prefix}_report.txt", "w") as f:
            f.write(text + "\n")
        for p in harness.write_figures(report, out_prefix):
            click.echo(f"wrote {p}")


@main.command()
@click.argument("scene_path", type=click.Path(exists=True))
@click.option("--listen", default="127.0.0.1:8090",
              help="Viewer websocket address.")
@click.option("--workers", "workers_spec", default="1",
              help="N in-process workers, or tcp:host:port/N to accept N "
                   "remote workers.")
@click.option("--res", default="640x360")
@click.option("--spp", type=int, default=1)
@click.option("--depth", type=int, default=5)
def serve(scene_path, listen, workers_spec, res, spp, depth):
    """Serve one interactive viewer session."""
    import asyncio

    from .dfb import (CameraState, Head, inprocess_pair, run_worker,
                      serve as serve_async)
    from .dfb.transport import TcpListener
    from .ingest.biff import write_biff
    from .render import RenderConfig

    scene = _load_scene(scene_path)
    buf = io.BytesIO()
    write_biff(scene, buf)
    biff = buf.getvalue()
    w, h = _parse_res(res)
    config = RenderConfig(max_path_depth=depth, samples_per_frame=spp)
    base_dir = os.path.dirname(scene_path) or "."

    transports = []
    if workers_spec.startswith("tcp:"):
        spec_body = workers_spec[4:]
        addr, _, count = spec_body.rpartition("/")
        host, port = _parse_addr(addr)
        listener = TcpListener(host, port)
        click.echo(f"waiting for {count} workers on {host}:{port} ...")
        for _ in range(int(count)):
            transports.append(listener.accept())
    else:
        for _ in range(int(workers_spec)):
            head_end, worker_end = inprocess_pair()
            threading.Thread(target=run_worker, args=(worker_end, base_dir),
                             daemon=True).start()
            transports.append(head_end)

    head = Head(transports, biff, config, w, h)
    head.handshake()
    head.camera = CameraState.from_camera(scene.camera)
    host, port = _parse_addr(listen)
    click.echo(f"serving ws://{host}:{port} with {len(transports)} workers")
    asyncio.run(serve_async(host, port, head, config))


@main.command()
@click.option("--connect", required=True, help="Head address host:port.")
@click.option("--threads", type=int, default=1)
@click.option("--base-dir", default=".", type=click.Path())
def worker(connect, threads, base_dir):
    """Run a render worker against a remote head."""
    from .dfb import connect_tcp, run_worker

    host, port = _parse_addr(connect)
    run_worker(connect_tcp(host, port), base_dir=base_dir, threads=threads)


if __name__ == "__main__":
    main()
