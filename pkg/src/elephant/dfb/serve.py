"""Interactive viewer service: streams tonemapped frames over a websocket
and steers the head from viewer control messages.

One duplex stream per session: text frames carry control JSON
({type: "camera"|"config"|"stats-request"}), binary frames carry
{u32 frameIndex, u32 frameInSequence, u16 mode, u16 format, u32 width,
u32 height, payload}; format 0 is raw 8-bit sRGB, 1 is PNG.
"""
from __future__ import annotations

import asyncio
import io
import json
import struct

import numpy as np

from ..render import RenderConfig, RenderMode, frame_image
from . import protocol as pr
from .head import FrameRecord, Head
from .worker import mode_from_index, mode_to_index

FORMAT_RAW = 0
FORMAT_PNG = 1

_HEADER = struct.Struct("<IIHHII")


class MalformedClientMessage(ValueError):
    pass


class BindFailure(OSError):
    pass


def pack_viewer_frame(frame_index: int, frame_in_sequence: int, mode: int,
                      fmt: int, width: int, height: int,
                      payload: bytes) -> bytes:
    return _HEADER.pack(frame_index, frame_in_sequence, mode, fmt,
                        width, height) + payload


def unpack_viewer_frame(data: bytes) -> dict:
    if len(data) < _HEADER.size:
        raise MalformedClientMessage("short frame message")
    fi, fis, mode, fmt, w, h = _HEADER.unpack_from(data, 0)
    return {"frameIndex": fi, "frameInSequence": fis, "mode": mode,
            "format": fmt, "width": w, "height": h,
            "payload": data[_HEADER.size:]}


def _encode_png(image: np.ndarray) -> bytes:
    from PIL import Image
    buf = io.BytesIO()
    Image.fromarray(image, "RGB").save(buf, format="PNG")
    return buf.getvalue()


class ViewerSession:
    """Protocol state for one connected viewer; transport-agnostic so the
    same logic runs under tests without a socket."""

    def __init__(self, head: Head, config: RenderConfig,
                 exposure: float = 1.0):
        self.head = head
        self.config = config
        self.exposure = exposure
        self.format = FORMAT_RAW
        self.denoise_on = False

    # -- outgoing ----------------------------------------------------------
    def frame_message(self, rec: FrameRecord) -> bytes:
        fb = self.head.fb
        override = None
        if self.denoise_on and rec.denoised is not None:
            override = rec.denoised
        image = frame_image(fb, self.config.mode, self.exposure,
                            color_override=override)
        payload = image.tobytes() if self.format == FORMAT_RAW \
            else _encode_png(image)
        return pack_viewer_frame(rec.frame_index, rec.frame_in_sequence,
                                 mode_to_index(self.config.mode), self.format,
                                 fb.width, fb.height, payload)

    def stats_message(self, rec: FrameRecord) -> str:
        pixels = self.head.fb.width * self.head.fb.height
        return json.dumps({
            "type": "stats",
            "frameMillis": rec.frame_millis,
            "sharePercents": {k: 100.0 * v for k, v in rec.shares.items()},
            "raysPerPixel": rec.rays_traced / max(pixels, 1),
            "spp": rec.sample_count,
        })

    # -- incoming ----------------------------------------------------------
    def handle_control(self, text: str) -> bool:
        """Apply one control message; True means the caller owes the viewer a
        stats reply."""
        try:
            msg = json.loads(text)
            kind = msg["type"]
        except (ValueError, KeyError, TypeError) as e:
            raise MalformedClientMessage(str(e))
        if kind == "camera":
            try:
                cam = pr.CameraState(
                    position=np.asarray(msg["position"], np.float32),
                    look_at=np.asarray(msg["lookAt"], np.float32),
                    up=np.asarray(msg["up"], np.float32),
                    fov_y=float(msg.get("fovY", 50.0)))
            except (KeyError, ValueError, TypeError) as e:
                raise MalformedClientMessage(str(e))
            self.head.update_camera(cam)
            return False
        if kind == "config":
            if "mode" in msg:
                try:
                    self.config.mode = RenderMode(msg["mode"])
                except ValueError as e:
                    raise MalformedClientMessage(str(e))
            if "spp" in msg:
                self.config.samples_per_frame = int(msg["spp"])
            if "maxDepth" in msg:
                self.config.max_path_depth = int(msg["maxDepth"])
            if "denoise" in msg:
                self.denoise_on = bool(msg["denoise"])
                self.head.denoise_frames = self.denoise_on
            if "exposure" in msg:
                self.exposure = float(msg["exposure"])
            if "format" in msg:
                self.format = FORMAT_PNG if msg["format"] == "png" else FORMAT_RAW
            self.head.config = self.config
            self.head.handshake()
            # config change restarts accumulation, like a camera move
            self.head.fb.reset()
            self.head.frame_in_sequence = 0
            return False
        if kind == "stats-request":
            return True
        raise MalformedClientMessage(f"unknown control type {kind!r}")


async def serve_session(websocket, head: Head, config: RenderConfig,
                        max_frames: int | None = None):
    """Drive the render loop for one connected viewer until disconnect."""
    session = ViewerSession(head, config)
    loop = asyncio.get_running_loop()
    controls: asyncio.Queue = asyncio.Queue()
    closed = asyncio.Event()

    async def reader():
        try:
            async for raw in websocket:
                if isinstance(raw, bytes):
                    continue  # viewers only send text control frames
                await controls.put(raw)
        finally:
            closed.set()

    reader_task = asyncio.create_task(reader())
    frame = 0
    stats_owed = False
    try:
        while not closed.is_set() and (max_frames is None or frame < max_frames):
            # controls apply between frames so steering never races a commit
            while not controls.empty():
                try:
                    if session.handle_control(controls.get_nowait()):
                        stats_owed = True
                except MalformedClientMessage as e:
                    await websocket.close(code=1002, reason=str(e)[:100])
                    return
            rec = await loop.run_in_executor(None, head.render_frame, frame)
            if session.denoise_on:
                await loop.run_in_executor(None, head.drain)
            await websocket.send(session.frame_message(rec))
            if stats_owed:
                stats_owed = False
                await websocket.send(session.stats_message(rec))
            frame += 1
    finally:
        reader_task.cancel()
        head.shutdown()


async def serve(listen_host: str, listen_port: int, head: Head,
                config: RenderConfig, max_frames: int | None = None):
    """Accept a single viewer session, then return."""
    import websockets

    done = asyncio.Event()

    async def handler(websocket):
        try:
            await serve_session(websocket, head, config, max_frames)
        finally:
            done.set()

    try:
        server = await websockets.serve(handler, listen_host, listen_port,
                                        max_size=None)
    except OSError as e:
        raise BindFailure(str(e))
    async with server:
        await done.wait()
