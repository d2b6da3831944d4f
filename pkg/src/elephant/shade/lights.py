"""Light sampling: quad area lights and a (optionally textured) environment.

Per-light operations, vectorized over batches of shade points. Strategy
selection across multiple lights is the renderer's job; the pdfs returned
here are per-light solid-angle densities.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scene.model import LightDesc, LightKind


def quad_normal_area(corners: np.ndarray) -> tuple[np.ndarray, float]:
    """Unit normal (from corner winding) and area of a planar quad."""
    c = np.asarray(corners, np.float64)
    e1 = c[1] - c[0]
    e2 = c[3] - c[0]
    n = np.cross(e1, e2)
    a1 = 0.5 * np.linalg.norm(np.cross(c[1] - c[0], c[2] - c[0]))
    a2 = 0.5 * np.linalg.norm(np.cross(c[2] - c[0], c[3] - c[0]))
    ln = np.linalg.norm(n)
    if ln < 1e-20:
        n = np.cross(c[1] - c[0], c[2] - c[0])
        ln = max(np.linalg.norm(n), 1e-20)
    return n / ln, float(a1 + a2)


def validate_quad_light(light: LightDesc, tol: float = 1e-4) -> None:
    """Corners must be coplanar within tol of the edge length scale."""
    c = light.corners.astype(np.float64)
    n, _ = quad_normal_area(c)
    edge = max(np.linalg.norm(c[1] - c[0]), np.linalg.norm(c[3] - c[0]), 1e-20)
    off = abs(np.dot(c[2] - c[0], n))
    if off > tol * edge:
        raise ValueError(f"quad light corners not coplanar: offset {off:.2e}")
    if light.radiance is not None and (light.radiance < 0).any():
        raise ValueError("light radiance must be non-negative")


@dataclass
class LightSample:
    direction: np.ndarray  # (n, 3) unit, from shade point toward the light
    distance: np.ndarray   # (n,)
    radiance: np.ndarray   # (n, 3); zero for backfacing quad samples
    pdf: np.ndarray        # (n,) solid-angle density


def sample_quad_light(light: LightDesc, points: np.ndarray,
                      u: np.ndarray) -> LightSample:
    """Area sampling via the bilinear map (exactly uniform for the
    parallelogram/rectangle lights production scenes use);
    pdf = dist^2 / (area * |cos theta_light|)."""
    c = light.corners.astype(np.float64)
    points = np.asarray(points, np.float64).reshape(-1, 3)
    u = np.asarray(u, np.float64).reshape(-1, 2)
    normal, area = quad_normal_area(c)
    u0 = u[:, 0:1]
    u1 = u[:, 1:2]
    x = ((1 - u0) * (1 - u1) * c[0] + u0 * (1 - u1) * c[1]
         + u0 * u1 * c[2] + (1 - u0) * u1 * c[3])

    to_light = x - points
    dist = np.linalg.norm(to_light, axis=1)
    wi = to_light / np.maximum(dist, 1e-20)[:, None]
    cos_l = -(wi @ normal)
    front = cos_l > 1e-9
    radiance = np.where(front[:, None],
                        light.radiance.astype(np.float64), 0.0)
    pdf = dist ** 2 / np.maximum(area * np.abs(cos_l), 1e-20)
    return LightSample(direction=wi, distance=dist, radiance=radiance, pdf=pdf)


def quad_light_pdf(light: LightDesc, points: np.ndarray, wi: np.ndarray,
                   dist: np.ndarray) -> np.ndarray:
    """Solid-angle pdf of area sampling producing direction wi at distance."""
    normal, area = quad_normal_area(light.corners)
    cos_l = np.abs(np.asarray(wi, np.float64).reshape(-1, 3) @ normal)
    return np.asarray(dist, np.float64) ** 2 / np.maximum(area * cos_l, 1e-20)


ENV_PDF = 1.0 / (4.0 * np.pi)


def sample_environment(light: LightDesc, n: int, u: np.ndarray) -> LightSample:
    """Uniform sphere directions; pdf = 1/(4 pi)."""
    u = np.asarray(u, np.float64).reshape(-1, 2)
    z = 1.0 - 2.0 * u[:, 0]
    s = np.sqrt(np.maximum(1.0 - z ** 2, 0.0))
    phi = 2.0 * np.pi * u[:, 1]
    wi = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    return LightSample(direction=wi,
                       distance=np.full(n, np.inf),
                       radiance=eval_environment(light, wi),
                       pdf=np.full(n, ENV_PDF))


def _latlong_lookup(image: np.ndarray, wi: np.ndarray) -> np.ndarray:
    """Bilinear lat-long lookup: wrap in longitude, clamp in latitude."""
    h, w = image.shape[:2]
    phi = np.arctan2(wi[:, 1], wi[:, 0])          # [-pi, pi]
    theta = np.arccos(np.clip(wi[:, 2], -1.0, 1.0))
    x = (phi / (2.0 * np.pi) + 0.5) * w - 0.5
    y = theta / np.pi * h - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    xa = np.mod(x0, w)
    xb = np.mod(x0 + 1, w)
    ya = np.clip(y0, 0, h - 1)
    yb = np.clip(y0 + 1, 0, h - 1)
    img = image.astype(np.float64)
    return ((1 - fx) * (1 - fy))[:, None] * img[ya, xa] \
        + (fx * (1 - fy))[:, None] * img[ya, xb] \
        + ((1 - fx) * fy)[:, None] * img[yb, xa] \
        + (fx * fy)[:, None] * img[yb, xb]


_ENV_IMAGES: dict[int, np.ndarray] = {}


def bind_environment_image(light: LightDesc, image: np.ndarray) -> None:
    """Attach a (h, w, 3) linear lat-long image to an environment light."""
    _ENV_IMAGES[id(light)] = np.ascontiguousarray(image, np.float64)


def _load_env_image(light: LightDesc) -> np.ndarray | None:
    key = id(light)
    if key in _ENV_IMAGES:
        return _ENV_IMAGES[key]
    if light.env_map_path:
        from PIL import Image
        img = np.asarray(Image.open(light.env_map_path), np.float64) / 255.0
        if img.ndim == 2:
            img = np.repeat(img[:, :, None], 3, axis=2)
        _ENV_IMAGES[key] = img[:, :, :3]
        return _ENV_IMAGES[key]
    return None


def eval_environment(light: LightDesc, wi: np.ndarray) -> np.ndarray:
    assert light.kind == LightKind.ENVIRONMENT
    wi = np.asarray(wi, np.float64).reshape(-1, 3)
    tint = (light.env_constant.astype(np.float64)
            if light.env_constant is not None else np.ones(3))
    image = _load_env_image(light)
    if image is None:
        return np.broadcast_to(tint, (len(wi), 3)).copy()
    return _latlong_lookup(image, wi) * tint
