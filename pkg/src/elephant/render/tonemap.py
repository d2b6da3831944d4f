"""Display transform: exposure, Reinhard, sRGB encode, 8-bit quantize."""
from __future__ import annotations

import numpy as np

from ..shade.facetex import linear_to_srgb


def tonemap_for_display(linear: np.ndarray, exposure: float = 1.0) -> np.ndarray:
    """(…, 3) linear RGB -> uint8 sRGB."""
    x = np.maximum(np.asarray(linear, np.float64) * exposure, 0.0)
    x = x / (1.0 + x)
    srgb = linear_to_srgb(x)
    return np.clip(np.rint(srgb * 255.0), 0, 255).astype(np.uint8)


def write_pfm(path: str, image: np.ndarray) -> None:
    """32-bit float PFM, little-endian, bottom-up scanline order."""
    img = np.asarray(image, np.float32)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w, c = img.shape
    header = b"PF\n" if c == 3 else b"Pf\n"
    with open(path, "wb") as f:
        f.write(header)
        f.write(f"{w} {h}\n".encode())
        f.write(b"-1.0\n")  # negative scale = little-endian
        f.write(np.ascontiguousarray(img[::-1], "<f4").tobytes())


def read_pfm(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        kind = f.readline().strip()
        w, h = map(int, f.readline().split())
        scale = float(f.readline())
        c = 3 if kind == b"PF" else 1
        dt = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(f.read(w * h * c * 4), dt).reshape(h, w, c)
    return data[::-1].astype(np.float32)
