"""Cubic Bezier curve tessellation into ribbon quad meshes.

Curves are rendered as tessellated ribbons rather than by direct ray-curve
intersection: each span becomes `segments_per_span` quads whose centerline
interpolates the Bezier exactly at the parameter knots. Flat ribbons face the
camera hint (+Z when absent); round curves are approximated by two crossed
ribbons.
"""
from __future__ import annotations

import numpy as np

from .model import CurveSet, CurveStyle, QuadMesh


def eval_bezier(cps: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate cubic Bezier spans. cps: (s,4,3); t: (k,); returns (s,k,3)."""
    t = np.asarray(t, dtype=np.float64)[None, :, None]
    p0, p1, p2, p3 = (cps[:, i, None, :].astype(np.float64) for i in range(4))
    u = 1.0 - t
    return (u ** 3 * p0 + 3 * u ** 2 * t * p1 + 3 * u * t ** 2 * p2 + t ** 3 * p3)


def eval_bezier_tangent(cps: np.ndarray, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)[None, :, None]
    p0, p1, p2, p3 = (cps[:, i, None, :].astype(np.float64) for i in range(4))
    u = 1.0 - t
    return 3 * (u ** 2 * (p1 - p0) + 2 * u * t * (p2 - p1) + t ** 2 * (p3 - p2))


def _interp_widths(widths: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Piecewise-linear width over the knots 0, 1/3, 2/3, 1. Returns (s,k)."""
    knots = np.array([0.0, 1 / 3, 2 / 3, 1.0])
    out = np.empty((len(widths), len(t)))
    for i, w in enumerate(widths.astype(np.float64)):
        out[i] = np.interp(t, knots, w)
    return out


def _safe_normalize(v: np.ndarray, fallback) -> np.ndarray:
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    bad = n[..., 0] < 1e-12
    out = v / np.maximum(n, 1e-12)
    out[bad] = fallback
    return out


def tessellate_curves(curves: CurveSet, segments_per_span: int,
                      camera_hint: np.ndarray | None = None) -> QuadMesh:
    """Tessellate every span into `segments_per_span` ribbon quads."""
    if segments_per_span < 1:
        raise ValueError("segments_per_span must be >= 1")
    n_spans = curves.primitive_count
    if n_spans == 0:
        return QuadMesh(positions=np.zeros((0, 3), np.float32),
                        indices=np.zeros((0, 4), np.uint32))
    view = np.array([0.0, 0.0, 1.0]) if camera_hint is None \
        else np.asarray(camera_hint, dtype=np.float64)
    view = view / np.linalg.norm(view)

    k = segments_per_span
    t = np.arange(k + 1) / k
    centers = eval_bezier(curves.control_points, t)      # (s, k+1, 3)
    tangents = eval_bezier_tangent(curves.control_points, t)
    tangents = _safe_normalize(tangents, np.array([1.0, 0.0, 0.0]))
    widths = _interp_widths(curves.widths, t)            # (s, k+1)

    side = _safe_normalize(np.cross(view[None, None, :], tangents),
                           np.array([0.0, 1.0, 0.0]))
    half = 0.5 * widths[..., None]
    rails = [centers - side * half, centers + side * half]
    if curves.style == CurveStyle.ROUND:
        side2 = _safe_normalize(np.cross(side, tangents), np.array([0.0, 0.0, 1.0]))
        rails += [centers - side2 * half, centers + side2 * half]

    positions = []
    indices = []
    base = 0
    n_ribbons = len(rails) // 2
    for r in range(n_ribbons):
        lo, hi = rails[2 * r], rails[2 * r + 1]
        # vertices per span: (k+1) pairs, laid out [lo0, hi0, lo1, hi1, ...]
        verts = np.stack([lo, hi], axis=2).reshape(n_spans, -1, 3)
        positions.append(verts.reshape(-1, 3))
        span_base = base + np.arange(n_spans)[:, None] * (2 * (k + 1))
        seg = np.arange(k)[None, :] * 2
        a = span_base + seg          # lo_j
        b = span_base + seg + 1      # hi_j
        c = span_base + seg + 3      # hi_{j+1}
        d = span_base + seg + 2      # lo_{j+1}
        indices.append(np.stack([a, b, c, d], axis=-1).reshape(-1, 4))
        base += n_spans * 2 * (k + 1)
    return QuadMesh(positions=np.concatenate(positions).astype(np.float32),
                    indices=np.concatenate(indices).astype(np.uint32))
