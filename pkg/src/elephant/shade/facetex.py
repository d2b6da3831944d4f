"""Per-face textures: a tiny geometry-addressed format plus an LRU cache.

Texels live per geometric face (one grid per quad), addressed by face ID and
intra-face (u, v) — there is no global UV atlas. File layout (little-endian):
magic "FTEX", u32 version=1, u32 faceCount, u8 channels (1|3), u8 encoding
(0 = u8 sRGB, 1 = f32 linear), then per face {u16 resU, u16 resV,
u64 dataOffset}; texel data row-major, v-major.

The cache holds decoded per-face blocks under a byte budget and keeps at most
`open_handle_cap` file objects open, both LRU. Lookups through the cache are
bit-identical to uncached reads regardless of eviction history.
"""
from __future__ import annotations

import io
import struct
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

MAGIC = b"FTEX"
VERSION = 1


class TextureIoError(IOError):
    def __init__(self, path, reason=""):
        super().__init__(f"{path}: {reason}" if reason else str(path))
        self.path = path


class FaceIdOutOfRange(IndexError):
    pass


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.clip(np.asarray(c, np.float64), 0.0, 1.0)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * c ** (1 / 2.4) - 0.055)


def _check_res(r: int) -> None:
    if not (1 <= r <= 256 and (r & (r - 1)) == 0):
        raise ValueError(f"face resolution {r} must be a power of two <= 256")


def write_ftex(path: str, faces: list[np.ndarray], encoding: int = 0) -> None:
    """faces: list of (resV, resU, channels) arrays. encoding 0 expects
    sRGB-encoded values in [0,1] (stored as u8); 1 stores raw f32 linear."""
    if not faces:
        raise ValueError("need at least one face")
    channels = faces[0].shape[2] if faces[0].ndim == 3 else 1
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")
    blobs = []
    table = []
    offset = 4 + 4 + 4 + 1 + 1 + len(faces) * 12
    for face in faces:
        face = np.asarray(face)
        if face.ndim == 2:
            face = face[:, :, None]
        rv, ru, ch = face.shape
        _check_res(ru)
        _check_res(rv)
        if ch != channels:
            raise ValueError("mixed channel counts in one file")
        if encoding == 0:
            data = np.clip(np.rint(face * 255.0), 0, 255).astype(np.uint8).tobytes()
        else:
            data = face.astype("<f4").tobytes()
        table.append((ru, rv, offset))
        blobs.append(data)
        offset += len(data)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IIBB", VERSION, len(faces), channels, encoding))
        for ru, rv, off in table:
            f.write(struct.pack("<HHQ", ru, rv, off))
        for b in blobs:
            f.write(b)


@dataclass
class _FtexHeader:
    face_count: int
    channels: int
    encoding: int
    res_u: np.ndarray
    res_v: np.ndarray
    offsets: np.ndarray


def _read_header(f, path) -> _FtexHeader:
    head = f.read(14)
    if len(head) < 14 or head[:4] != MAGIC:
        raise TextureIoError(path, "bad magic")
    version, face_count, channels, encoding = struct.unpack("<IIBB", head[4:])
    if version != VERSION:
        raise TextureIoError(path, f"unsupported version {version}")
    table = np.frombuffer(f.read(face_count * 12), dtype="<u2,<u2,<u8")
    if len(table) != face_count:
        raise TextureIoError(path, "truncated face table")
    return _FtexHeader(face_count=face_count, channels=channels,
                       encoding=encoding,
                       res_u=table["f0"].astype(np.int64),
                       res_v=table["f1"].astype(np.int64),
                       offsets=table["f2"].astype(np.int64))


def read_face_uncached(path: str, face_id: int) -> np.ndarray:
    """Reference reader: decode one face straight from disk, linear float."""
    with open(path, "rb") as f:
        hdr = _read_header(f, path)
        return _decode_face(f, path, hdr, face_id)


def _decode_face(f, path, hdr: _FtexHeader, face_id: int) -> np.ndarray:
    if not 0 <= face_id < hdr.face_count:
        raise FaceIdOutOfRange(f"face {face_id} of {hdr.face_count} in {path}")
    ru = int(hdr.res_u[face_id])
    rv = int(hdr.res_v[face_id])
    ch = hdr.channels
    f.seek(int(hdr.offsets[face_id]))
    if hdr.encoding == 0:
        raw = f.read(ru * rv * ch)
        if len(raw) != ru * rv * ch:
            raise TextureIoError(path, "truncated face data")
        texels = np.frombuffer(raw, np.uint8).reshape(rv, ru, ch) / 255.0
        return srgb_to_linear(texels)
    raw = f.read(ru * rv * ch * 4)
    if len(raw) != ru * rv * ch * 4:
        raise TextureIoError(path, "truncated face data")
    return np.frombuffer(raw, "<f4").reshape(rv, ru, ch).astype(np.float64)


class FaceTextureCache:
    """Process-wide LRU cache of decoded face blocks.

    byte_budget limits resident decoded bytes; open_handle_cap limits file
    objects kept open. Thread-safe; hit/miss/lookup counters included.
    """

    def __init__(self, byte_budget: int | None = None,
                 open_handle_cap: int = 100):
        if open_handle_cap < 1:
            raise ValueError("open_handle_cap must be >= 1")
        self.byte_budget = byte_budget  # None = unlimited
        self.open_handle_cap = open_handle_cap
        self._lock = threading.Lock()
        self._faces: OrderedDict[tuple[str, int], np.ndarray] = OrderedDict()
        self._headers: dict[str, _FtexHeader] = {}
        self._handles: OrderedDict[str, io.BufferedReader] = OrderedDict()
        self._resident_bytes = 0
        self.lookups = 0
        self.hits = 0
        self.misses = 0

    # -- internal, lock held --------------------------------------------
    def _handle(self, path: str):
        if path in self._handles:
            self._handles.move_to_end(path)
            return self._handles[path]
        if len(self._handles) >= self.open_handle_cap:
            _, old = self._handles.popitem(last=False)
            old.close()
        f = open(path, "rb")
        self._handles[path] = f
        return f

    def _header(self, path: str) -> _FtexHeader:
        if path not in self._headers:
            f = self._handle(path)
            f.seek(0)
            self._headers[path] = _read_header(f, path)
        return self._headers[path]

    def _face(self, path: str, face_id: int) -> np.ndarray:
        key = (path, face_id)
        self.lookups += 1
        if key in self._faces:
            self.hits += 1
            self._faces.move_to_end(key)
            return self._faces[key]
        self.misses += 1
        hdr = self._header(path)
        block = _decode_face(self._handle(path), path, hdr, face_id)
        block.setflags(write=False)
        size = block.nbytes
        if self.byte_budget is None or size <= self.byte_budget:
            self._faces[key] = block
            self._resident_bytes += size
            while (self.byte_budget is not None
                   and self._resident_bytes > self.byte_budget and self._faces):
                _, evicted = self._faces.popitem(last=False)
                self._resident_bytes -= evicted.nbytes
        return block

    # -- public ----------------------------------------------------------
    @property
    def resident_bytes(self) -> int:
        return self._resident_bytes

    @property
    def open_files(self) -> int:
        return len(self._handles)

    def face_count(self, path: str) -> int:
        with self._lock:
            return self._header(path).face_count

    def sample(self, path: str, face_ids: np.ndarray, u: np.ndarray,
               v: np.ndarray) -> np.ndarray:
        """Bilinear lookup inside each face; clamped at face borders (no
        cross-face filtering); texel centers at (i+0.5)/res; linear output."""
        face_ids = np.atleast_1d(np.asarray(face_ids, np.int64))
        u = np.atleast_1d(np.asarray(u, np.float64))
        v = np.atleast_1d(np.asarray(v, np.float64))
        out = None
        with self._lock:
            channels = self._header(path).channels
            out = np.empty((len(face_ids), channels))
            for fid in np.unique(face_ids):
                block = self._face(path, int(fid))
                sel = face_ids == fid
                out[sel] = _bilinear(block, u[sel], v[sel])
        return out

    def close(self):
        with self._lock:
            for f in self._handles.values():
                f.close()
            self._handles.clear()
            self._faces.clear()
            self._resident_bytes = 0


def _bilinear(block: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    rv, ru, _ = block.shape
    x = np.clip(u, 0.0, 1.0) * ru - 0.5
    y = np.clip(v, 0.0, 1.0) * rv - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    xa = np.clip(x0, 0, ru - 1)
    xb = np.clip(x0 + 1, 0, ru - 1)
    ya = np.clip(y0, 0, rv - 1)
    yb = np.clip(y0 + 1, 0, rv - 1)
    return ((1 - fx) * (1 - fy))[:, None] * block[ya, xa] \
        + (fx * (1 - fy))[:, None] * block[ya, xb] \
        + ((1 - fx) * fy)[:, None] * block[yb, xa] \
        + (fx * fy)[:, None] * block[yb, xb]


def sample_texture(cache: FaceTextureCache, path: str, face_id, u, v) -> np.ndarray:
    return cache.sample(path, face_id, u, v)
