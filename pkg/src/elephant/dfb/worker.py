"""Render worker: owns a round-robin subset of tiles, accumulates them
locally across frames, and streams the accumulated sums back to the head.

If ownership changes mid-run (a peer dropped), newly acquired tiles have no
local history; the deterministic sampler lets the worker replay every frame
since the last accumulation reset for exactly those tiles, reproducing the
sums the lost peer held, bit for bit.
"""
from __future__ import annotations

import io
import time

from ..ingest.biff import read_biff
from ..render import FrameBuffer, RenderConfig, RenderMode, render_frame
from ..render.context import build_context
from . import protocol as pr
from .transport import Transport, TransportClosed

_MODE_BY_INDEX = list(RenderMode)


def mode_to_index(mode: RenderMode) -> int:
    return _MODE_BY_INDEX.index(RenderMode(mode))


def mode_from_index(idx: int) -> RenderMode:
    return _MODE_BY_INDEX[idx]


class WorkerState:
    def __init__(self, base_dir: str = ".", threads: int = 1):
        self.base_dir = base_dir
        self.threads = threads
        self.worker_id = 0
        self.num_workers = 1
        self.ctx = None
        self.scene_sha = None
        self.config: RenderConfig | None = None
        self.fb: FrameBuffer | None = None
        self.accum_start: int | None = None
        self.tile_done: dict[int, int] = {}  # tile index -> last frame folded in

    def _reset_accumulation(self):
        if self.fb is not None:
            self.fb.reset()
        self.accum_start = None
        self.tile_done = {}

    def _apply_camera(self, cam_state: pr.CameraState):
        cam = self.ctx.scene.camera
        cam.position = cam_state.position.copy()
        cam.look_at = cam_state.look_at.copy()
        cam.up = cam_state.up.copy()
        cam.fov_y = cam_state.fov_y

    def handle_set_scene(self, msg: pr.SetScene):
        actual = pr.scene_hash(msg.biff)
        if actual != msg.sha256:
            raise pr.SceneHashMismatch(
                f"scene hash {actual[:12]} != announced {msg.sha256[:12]}")
        scene = read_biff(io.BytesIO(msg.biff))
        self.ctx = build_context(scene, base_dir=self.base_dir)
        self.scene_sha = actual
        self._reset_accumulation()

    def handle_set_config(self, msg: pr.SetConfig):
        self.config = RenderConfig(max_path_depth=msg.max_path_depth,
                                   samples_per_frame=msg.samples_per_frame,
                                   mode=mode_from_index(msg.mode),
                                   deterministic=msg.deterministic,
                                   seed=msg.seed)
        self.fb = FrameBuffer(msg.width, msg.height)
        self._reset_accumulation()

    def handle_render_frame(self, msg: pr.RenderFrame, transport: Transport):
        if self.ctx is None:
            raise pr.ProtocolError("RenderFrame before SetScene")
        if self.config is None or self.fb is None:
            raise pr.ProtocolError("RenderFrame before SetConfig")
        self._apply_camera(msg.camera)
        f = msg.frame_index
        if self.accum_start is None:
            self.accum_start = f

        ownership = pr.assign_tiles(len(self.fb.tiles), self.num_workers)
        owned = ownership.owned(self.worker_id)
        tiles_by_index = {t.index: t for t in self.fb.tiles}

        t0 = time.perf_counter()
        stats = None
        for g in range(self.accum_start, f + 1):
            todo = [tiles_by_index[i] for i in owned
                    if self.tile_done.get(i, self.accum_start - 1) < g]
            if not todo:
                continue
            s = render_frame(self.ctx, self.fb, self.config, g,
                             threads=self.threads, tiles=todo)
            for tile in todo:
                self.tile_done[tile.index] = g
            if g == f:
                stats = s
        wall_ms = (time.perf_counter() - t0) * 1000.0

        for i in owned:
            tile = tiles_by_index[i]
            ys = slice(tile.y0, tile.y0 + tile.h)
            xs = slice(tile.x0, tile.x0 + tile.w)
            sc = int(self.fb.sample_count[tile.y0, tile.x0])
            transport.send_msg(pr.TileResult(
                frame_index=f, tile_index=i, sample_count=sc,
                tile_w=tile.w, tile_h=tile.h,
                color=self.fb.color[ys, xs], albedo=self.fb.albedo[ys, xs],
                normal=self.fb.normal[ys, xs],
                cost=self.fb.cost[ys, xs].astype("uint32")))
        transport.send_msg(pr.FrameComplete(
            frame_index=f,
            shares=stats.shares if stats else {},
            rays_traced=stats.rays_traced if stats else 0,
            frame_millis=stats.frame_millis if stats else wall_ms))

    def handle(self, msg, transport: Transport) -> bool:
        """Dispatch one message; returns False when the worker should stop."""
        if isinstance(msg, pr.Hello):
            self.worker_id = msg.worker_id
            self.num_workers = msg.num_workers
        elif isinstance(msg, pr.SetScene):
            self.handle_set_scene(msg)
        elif isinstance(msg, pr.SetConfig):
            self.handle_set_config(msg)
        elif isinstance(msg, pr.CameraUpdate):
            if self.ctx is not None:
                self._apply_camera(msg.camera)
            self._reset_accumulation()
        elif isinstance(msg, pr.RenderFrame):
            self.handle_render_frame(msg, transport)
        elif isinstance(msg, pr.Shutdown):
            return False
        else:
            raise pr.ProtocolError(f"unexpected {type(msg).__name__}")
        return True


def run_worker(transport: Transport, base_dir: str = ".", threads: int = 1):
    """Serve one head connection until Shutdown or disconnect."""
    state = WorkerState(base_dir=base_dir, threads=threads)
    try:
        while True:
            msg = transport.recv_msg()
            if not state.handle(msg, transport):
                break
    except TransportClosed:
        pass
    finally:
        transport.close()
