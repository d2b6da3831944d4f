"""Wire protocol for the distributed framebuffer.

Messages are length-prefixed: u32 total payload length, u16 tag, then a
little-endian payload. Tile payloads carry accumulated color/albedo/normal
sums plus per-pixel ray cost, so committing a tile is an idempotent
overwrite on the head node.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

TAG_HELLO = 1
TAG_SET_SCENE = 2
TAG_SET_CONFIG = 3
TAG_RENDER_FRAME = 4
TAG_TILE_RESULT = 5
TAG_FRAME_COMPLETE = 6
TAG_CAMERA_UPDATE = 7
TAG_SHUTDOWN = 8


class ProtocolError(RuntimeError):
    pass


class SceneHashMismatch(ProtocolError):
    pass


class ZeroWorkers(ValueError):
    pass


@dataclass(frozen=True)
class TileOwnership:
    num_tiles: int
    num_workers: int

    def __post_init__(self):
        if self.num_workers < 1:
            raise ZeroWorkers("need at least one worker")
        if self.num_tiles < 0:
            raise ValueError("negative tile count")

    def owner(self, tile_index: int) -> int:
        return tile_index % self.num_workers

    def owned(self, worker_id: int) -> list[int]:
        return list(range(worker_id, self.num_tiles, self.num_workers))


def assign_tiles(num_tiles: int, num_workers: int) -> TileOwnership:
    return TileOwnership(num_tiles=num_tiles, num_workers=num_workers)


@dataclass
class CameraState:
    position: np.ndarray
    look_at: np.ndarray
    up: np.ndarray
    fov_y: float

    def pack(self) -> bytes:
        vals = np.concatenate([np.asarray(self.position, np.float32).reshape(3),
                               np.asarray(self.look_at, np.float32).reshape(3),
                               np.asarray(self.up, np.float32).reshape(3),
                               np.array([self.fov_y], np.float32)])
        return vals.astype("<f4").tobytes()

    @classmethod
    def unpack(cls, data: bytes) -> "CameraState":
        v = np.frombuffer(data[:40], "<f4")
        return cls(position=v[0:3].copy(), look_at=v[3:6].copy(),
                   up=v[6:9].copy(), fov_y=float(v[9]))

    @classmethod
    def from_camera(cls, cam) -> "CameraState":
        return cls(position=cam.position.copy(), look_at=cam.look_at.copy(),
                   up=cam.up.copy(), fov_y=cam.fov_y)


@dataclass
class Hello:
    worker_id: int
    num_workers: int = 1  # lets workers recompute round-robin ownership


@dataclass
class SetScene:
    biff: bytes
    sha256: str


@dataclass
class SetConfig:
    max_path_depth: int
    samples_per_frame: int
    mode: int
    deterministic: bool
    seed: int
    width: int
    height: int


@dataclass
class RenderFrame:
    frame_index: int
    camera: CameraState


@dataclass
class TileResult:
    frame_index: int
    tile_index: int
    sample_count: int
    tile_w: int
    tile_h: int
    color: np.ndarray   # (h, w, 3) f32 accumulated sums
    albedo: np.ndarray
    normal: np.ndarray
    cost: np.ndarray    # (h, w) u32 cumulative rays


@dataclass
class FrameComplete:
    frame_index: int
    shares: dict
    rays_traced: int
    frame_millis: float


@dataclass
class CameraUpdate:
    camera: CameraState


@dataclass
class Shutdown:
    pass


_CATEGORY_ORDER = ("traversal_intersect", "post_intersect", "texture",
                   "sample_shade", "other")


def scene_hash(biff: bytes) -> str:
    return hashlib.sha256(biff).hexdigest()


def encode(msg) -> bytes:
    if isinstance(msg, Hello):
        tag, payload = TAG_HELLO, struct.pack("<II", msg.worker_id, msg.num_workers)
    elif isinstance(msg, SetScene):
        h = msg.sha256.encode()
        tag = TAG_SET_SCENE
        payload = struct.pack("<I", len(h)) + h + msg.biff
    elif isinstance(msg, SetConfig):
        tag = TAG_SET_CONFIG
        payload = struct.pack("<IIHBQII", msg.max_path_depth,
                              msg.samples_per_frame, msg.mode,
                              1 if msg.deterministic else 0, msg.seed,
                              msg.width, msg.height)
    elif isinstance(msg, RenderFrame):
        tag = TAG_RENDER_FRAME
        payload = struct.pack("<I", msg.frame_index) + msg.camera.pack()
    elif isinstance(msg, TileResult):
        tag = TAG_TILE_RESULT
        payload = (struct.pack("<IIIHH", msg.frame_index, msg.tile_index,
                               msg.sample_count, msg.tile_w, msg.tile_h)
                   + np.ascontiguousarray(msg.color, "<f4").tobytes()
                   + np.ascontiguousarray(msg.albedo, "<f4").tobytes()
                   + np.ascontiguousarray(msg.normal, "<f4").tobytes()
                   + np.ascontiguousarray(msg.cost, "<u4").tobytes())
    elif isinstance(msg, FrameComplete):
        tag = TAG_FRAME_COMPLETE
        shares = struct.pack("<5d", *(msg.shares.get(c, 0.0)
                                      for c in _CATEGORY_ORDER))
        payload = struct.pack("<IQd", msg.frame_index, msg.rays_traced,
                              msg.frame_millis) + shares
    elif isinstance(msg, CameraUpdate):
        tag, payload = TAG_CAMERA_UPDATE, msg.camera.pack()
    elif isinstance(msg, Shutdown):
        tag, payload = TAG_SHUTDOWN, b""
    else:
        raise ProtocolError(f"cannot encode {type(msg).__name__}")
    body = struct.pack("<H", tag) + payload
    return struct.pack("<I", len(body)) + body


def decode(frame: bytes):
    """Decode one framed message (without the u32 length prefix)."""
    if len(frame) < 2:
        raise ProtocolError("short frame")
    (tag,) = struct.unpack_from("<H", frame, 0)
    p = frame[2:]
    if tag == TAG_HELLO:
        wid, nw = struct.unpack("<II", p)
        return Hello(worker_id=wid, num_workers=nw)
    if tag == TAG_SET_SCENE:
        (hlen,) = struct.unpack_from("<I", p, 0)
        sha = p[4:4 + hlen].decode()
        return SetScene(biff=p[4 + hlen:], sha256=sha)
    if tag == TAG_SET_CONFIG:
        d, s, m, det, seed, w, h = struct.unpack("<IIHBQII", p)
        return SetConfig(max_path_depth=d, samples_per_frame=s, mode=m,
                         deterministic=bool(det), seed=seed, width=w, height=h)
    if tag == TAG_RENDER_FRAME:
        (fi,) = struct.unpack_from("<I", p, 0)
        return RenderFrame(frame_index=fi, camera=CameraState.unpack(p[4:]))
    if tag == TAG_TILE_RESULT:
        fi, ti, sc, tw, th = struct.unpack_from("<IIIHH", p, 0)
        off = 16
        npx = tw * th
        color = np.frombuffer(p, "<f4", npx * 3, off).reshape(th, tw, 3)
        off += npx * 12
        albedo = np.frombuffer(p, "<f4", npx * 3, off).reshape(th, tw, 3)
        off += npx * 12
        normal = np.frombuffer(p, "<f4", npx * 3, off).reshape(th, tw, 3)
        off += npx * 12
        cost = np.frombuffer(p, "<u4", npx, off).reshape(th, tw)
        return TileResult(frame_index=fi, tile_index=ti, sample_count=sc,
                          tile_w=tw, tile_h=th, color=color, albedo=albedo,
                          normal=normal, cost=cost)
    if tag == TAG_FRAME_COMPLETE:
        fi, rays, ms = struct.unpack_from("<IQd", p, 0)
        shares = dict(zip(_CATEGORY_ORDER, struct.unpack_from("<5d", p, 20)))
        return FrameComplete(frame_index=fi, shares=shares, rays_traced=rays,
                             frame_millis=ms)
    if tag == TAG_CAMERA_UPDATE:
        return CameraUpdate(camera=CameraState.unpack(p))
    if tag == TAG_SHUTDOWN:
        return Shutdown()
    raise ProtocolError(f"unknown tag {tag}")
