"""Head node: broadcasts frames, gathers tiles, commits whole frames
atomically, and survives worker loss by reassigning ownership and
re-rendering the in-flight frame.

A frame commits only once every tile and every FrameComplete arrived, so a
mid-frame worker loss never taints the accumulated framebuffer: staged tiles
for the aborted attempt are discarded and the frame restarts under the new
ownership. Denoising runs on a side thread and overlaps the next frame's
render; the hand-off queue is bounded so a slow denoiser backpressures
instead of hoarding snapshots.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..render import FrameBuffer, RenderConfig, denoise
from . import protocol as pr
from .transport import Transport, TransportClosed
from .worker import mode_to_index

DENOISE_QUEUE_CAPACITY = 2


class AllWorkersLost(RuntimeError):
    pass


@dataclass
class FrameRecord:
    frame_index: int
    frame_in_sequence: int
    render_start: float
    render_end: float
    frame_millis: float
    rays_traced: int
    shares: dict
    sample_count: int
    restarts: int = 0
    denoise_start: float | None = None
    denoise_end: float | None = None
    denoised: np.ndarray | None = None


@dataclass
class HeadResult:
    fb: FrameBuffer
    records: list[FrameRecord] = field(default_factory=list)


class Head:
    def __init__(self, workers: list[Transport], scene_biff: bytes,
                 config: RenderConfig, width: int, height: int,
                 denoise_frames: bool = False, recv_timeout: float = 120.0):
        if not workers:
            raise pr.ZeroWorkers("head needs at least one worker")
        self.workers = list(workers)
        self.scene_biff = scene_biff
        self.config = config
        self.fb = FrameBuffer(width, height)
        self.denoise_frames = denoise_frames
        self.recv_timeout = recv_timeout
        self.frame_in_sequence = 0
        self.camera: pr.CameraState | None = None
        self._denoise_pool = ThreadPoolExecutor(max_workers=1)
        self._denoise_pending: list = []
        self.records: list[FrameRecord] = []

    # -- membership ---------------------------------------------------------
    def _broadcast(self, msg):
        lost = []
        for t in self.workers:
            try:
                t.send_msg(msg)
            except TransportClosed:
                lost.append(t)
        for t in lost:
            self._drop(t)

    def _drop(self, transport: Transport):
        if transport in self.workers:
            self.workers.remove(transport)
        if not self.workers:
            raise AllWorkersLost("every worker disconnected")
        self._rehello()

    def _rehello(self):
        for i, t in enumerate(self.workers):
            t.send_msg(pr.Hello(worker_id=i, num_workers=len(self.workers)))

    def handshake(self):
        self._rehello()
        sha = pr.scene_hash(self.scene_biff)
        self._broadcast(pr.SetScene(biff=self.scene_biff, sha256=sha))
        self._broadcast(pr.SetConfig(
            max_path_depth=self.config.max_path_depth,
            samples_per_frame=self.config.samples_per_frame,
            mode=mode_to_index(self.config.mode),
            deterministic=self.config.deterministic,
            seed=self.config.seed,
            width=self.fb.width, height=self.fb.height))

    # -- camera -------------------------------------------------------------
    def update_camera(self, camera: pr.CameraState):
        """Interactive move: restart accumulation everywhere."""
        self.camera = camera
        self._broadcast(pr.CameraUpdate(camera=camera))
        self.fb.reset()
        self.frame_in_sequence = 0

    # -- frame loop ---------------------------------------------------------
    def _recv_any(self, deadline: float):
        """Poll live workers round-robin until a message or the deadline."""
        while True:
            for t in list(self.workers):
                try:
                    return t, t.recv_msg(timeout=0.02)
                except TimeoutError:
                    continue
                except TransportClosed:
                    raise WorkerLost(t)
            if time.perf_counter() > deadline:
                raise TimeoutError("frame gather timed out")

    def render_frame(self, frame_index: int) -> FrameRecord:
        if self.camera is None:
            raise pr.ProtocolError("no camera set before RenderFrame")
        tiles = self.fb.tiles
        restarts = 0
        render_start = time.perf_counter()
        while True:
            try:
                staged, completes = self._gather(frame_index)
                break
            except WorkerLost as e:
                restarts += 1
                self._drop(e.transport)  # raises AllWorkersLost when empty
        render_end = time.perf_counter()

        # atomic commit: overwrite every tile with the gathered sums
        for tile in tiles:
            r = staged[tile.index]
            self.fb.set_tile(tile, r.color, r.albedo, r.normal,
                             r.cost.astype(np.uint64), r.sample_count)

        shares, rays = _merge_stats(completes)
        self.frame_in_sequence += 1  # 1-based; first frame after a reset is 1
        rec = FrameRecord(
            frame_index=frame_index,
            frame_in_sequence=self.frame_in_sequence,
            render_start=render_start, render_end=render_end,
            frame_millis=(render_end - render_start) * 1000.0,
            rays_traced=rays, shares=shares,
            sample_count=int(self.fb.sample_count.max(initial=0)),
            restarts=restarts)
        self.records.append(rec)
        if self.denoise_frames:
            self._submit_denoise(rec)
        return rec

    def _gather(self, frame_index: int):
        self._broadcast(pr.RenderFrame(frame_index=frame_index,
                                       camera=self.camera))
        need = {t.index for t in self.fb.tiles}
        staged: dict[int, pr.TileResult] = {}
        completes: list[pr.FrameComplete] = []
        waiting = set(id(t) for t in self.workers)
        deadline = time.perf_counter() + self.recv_timeout
        while need - set(staged) or waiting:
            transport, msg = self._recv_any(deadline)
            if isinstance(msg, pr.TileResult):
                if msg.frame_index == frame_index:
                    staged[msg.tile_index] = msg  # idempotent overwrite
            elif isinstance(msg, pr.FrameComplete):
                if msg.frame_index == frame_index:
                    completes.append(msg)
                    waiting.discard(id(transport))
            else:
                raise pr.ProtocolError(
                    f"unexpected {type(msg).__name__} from worker")
        return staged, completes

    # -- denoise pipeline ---------------------------------------------------
    def _submit_denoise(self, rec: FrameRecord):
        while len(self._denoise_pending) >= DENOISE_QUEUE_CAPACITY:
            self._denoise_pending.pop(0).result()
        color = self.fb.mean_color().copy()
        albedo = self.fb.mean_albedo().copy()
        normal = self.fb.mean_normal().copy()
        spp = max(rec.sample_count, 1)

        def task():
            rec.denoise_start = time.perf_counter()
            rec.denoised = denoise(color, albedo, normal, spp)
            rec.denoise_end = time.perf_counter()

        self._denoise_pending.append(self._denoise_pool.submit(task))

    def drain(self):
        for f in self._denoise_pending:
            f.result()
        self._denoise_pending.clear()

    def shutdown(self):
        self.drain()
        self._denoise_pool.shutdown(wait=True)
        for t in list(self.workers):
            try:
                t.send_msg(pr.Shutdown())
            except TransportClosed:
                pass
            t.close()


class WorkerLost(RuntimeError):
    def __init__(self, transport: Transport):
        super().__init__("worker connection lost")
        self.transport = transport


def _merge_stats(completes: list[pr.FrameComplete]):
    rays = sum(c.rays_traced for c in completes)
    shares: dict[str, float] = {}
    if completes:
        for c in completes:
            for k, v in c.shares.items():
                shares[k] = shares.get(k, 0.0) + v
        total = sum(shares.values())
        if total > 0:
            shares = {k: v / total for k, v in shares.items()}
    return shares, rays


def run_head(workers: list[Transport], scene_biff: bytes, config: RenderConfig,
             width: int, height: int, camera: pr.CameraState, frames: int,
             denoise_frames: bool = False,
             camera_updates: dict[int, pr.CameraState] | None = None
             ) -> HeadResult:
    """Drive `frames` frames and return the accumulated framebuffer plus
    per-frame records. `camera_updates` maps frame index -> new camera applied
    just before that frame (accumulation restarts)."""
    head = Head(workers, scene_biff, config, width, height,
                denoise_frames=denoise_frames)
    head.handshake()
    head.camera = camera
    try:
        for f in range(frames):
            if camera_updates and f in camera_updates:
                head.update_camera(camera_updates[f])
            head.render_frame(f)
        head.drain()
    finally:
        head.shutdown()
    return HeadResult(fb=head.fb, records=head.records)
