"""Binned SAH BVH builder over primitive AABBs.

16 bins per axis, at most 4 primitives per leaf, deterministic for a fixed
input order. Nodes are emitted into flat arrays ready for the numba traversal
kernels: bounds (n,6) float32 and meta (n,2) int32, where meta = (left, right)
for inner nodes and (-(start+1), count) for leaves. Leaf ranges index the
primitive order permutation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_BINS = 16
MAX_LEAF = 4


class EmptyInput(ValueError):
    pass


@dataclass
class Bvh:
    node_bounds: np.ndarray      # (n, 6) float32: min xyz, max xyz
    node_meta: np.ndarray        # (n, 2) int32
    primitive_order: np.ndarray  # (p,) int32 permutation of input primitives

    @property
    def node_count(self) -> int:
        return len(self.node_bounds)


def build_bvh(aabb_min: np.ndarray, aabb_max: np.ndarray) -> Bvh:
    """Build from per-primitive AABBs; centroids are derived internally."""
    aabb_min = np.ascontiguousarray(aabb_min, np.float32).reshape(-1, 3)
    aabb_max = np.ascontiguousarray(aabb_max, np.float32).reshape(-1, 3)
    n = len(aabb_min)
    if n == 0:
        raise EmptyInput("cannot build a BVH over zero primitives")
    if not (np.isfinite(aabb_min).all() and np.isfinite(aabb_max).all()):
        raise ValueError("non-finite AABB")
    centroids = 0.5 * (aabb_min.astype(np.float64) + aabb_max.astype(np.float64))

    order = np.arange(n, dtype=np.int32)
    bounds_list: list[np.ndarray] = []
    meta_list: list[tuple[int, int]] = []

    def emit_placeholder() -> int:
        bounds_list.append(np.empty(6, np.float32))
        meta_list.append((0, 0))
        return len(bounds_list) - 1

    def node_box(idx: np.ndarray) -> np.ndarray:
        lo = aabb_min[idx].min(axis=0)
        hi = aabb_max[idx].max(axis=0)
        return np.concatenate([lo, hi])

    def surface(lo, hi):
        d = np.maximum(hi - lo, 0.0)
        return 2.0 * (d[..., 0] * d[..., 1] + d[..., 1] * d[..., 2] + d[..., 2] * d[..., 0])

    def build(node_id: int, start: int, count: int):
        idx = order[start:start + count]
        box = node_box(idx)
        bounds_list[node_id] = box
        if count <= MAX_LEAF:
            meta_list[node_id] = (-(start + 1), count)
            return
        cen = centroids[idx]
        cmin = cen.min(axis=0)
        cmax = cen.max(axis=0)
        extent = cmax - cmin
        best = None  # (cost, axis, bin_split)
        for axis in range(3):
            if extent[axis] <= 0:
                continue
            rel = (cen[:, axis] - cmin[axis]) / extent[axis]
            bins = np.minimum((rel * N_BINS).astype(np.int32), N_BINS - 1)
            counts = np.bincount(bins, minlength=N_BINS)
            bin_lo = np.full((N_BINS, 3), np.inf, np.float64)
            bin_hi = np.full((N_BINS, 3), -np.inf, np.float64)
            for b in range(N_BINS):
                sel = bins == b
                if counts[b]:
                    bin_lo[b] = aabb_min[idx[sel]].min(axis=0)
                    bin_hi[b] = aabb_max[idx[sel]].max(axis=0)
            # prefix/suffix sweeps
            left_counts = np.cumsum(counts)[:-1]
            right_counts = count - left_counts
            lo_acc = np.minimum.accumulate(bin_lo, axis=0)
            hi_acc = np.maximum.accumulate(bin_hi, axis=0)
            lo_racc = np.minimum.accumulate(bin_lo[::-1], axis=0)[::-1]
            hi_racc = np.maximum.accumulate(bin_hi[::-1], axis=0)[::-1]
            left_area = surface(lo_acc[:-1], hi_acc[:-1])
            right_area = surface(lo_racc[1:], hi_racc[1:])
            valid = (left_counts > 0) & (right_counts > 0)
            if not valid.any():
                continue
            cost = np.where(valid, left_area * left_counts + right_area * right_counts,
                            np.inf)
            b = int(np.argmin(cost))
            if best is None or cost[b] < best[0]:
                best = (cost[b], axis, b, bins)
        if best is None:
            # degenerate centroids: median split keeps the tree bounded
            mid = count // 2
        else:
            _, axis, b, bins = best
            left_mask = bins <= b
            mid = int(left_mask.sum())
            order[start:start + count] = np.concatenate([idx[left_mask], idx[~left_mask]])
            if mid == 0 or mid == count:
                mid = count // 2
        left_id = emit_placeholder()
        right_id = emit_placeholder()
        meta_list[node_id] = (left_id, right_id)
        build(left_id, start, mid)
        build(right_id, start + mid, count - mid)

    root = emit_placeholder()
    build(root, 0, n)
    return Bvh(node_bounds=np.array(bounds_list, np.float32).reshape(-1, 6),
               node_meta=np.array(meta_list, np.int32).reshape(-1, 2),
               primitive_order=order)


def check_containment(bvh: Bvh, aabb_min: np.ndarray, aabb_max: np.ndarray,
                      slack: float = 1e-6) -> bool:
    """Exhaustively verify node/child containment invariants."""
    aabb_min = np.asarray(aabb_min, np.float32).reshape(-1, 3)
    aabb_max = np.asarray(aabb_max, np.float32).reshape(-1, 3)

    def covers(outer, lo, hi):
        return (outer[:3] <= lo + slack).all() and (outer[3:] >= hi - slack).all()

    for node_id in range(bvh.node_count):
        box = bvh.node_bounds[node_id]
        m0, m1 = bvh.node_meta[node_id]
        if m0 < 0:
            start, count = -int(m0) - 1, int(m1)
            prims = bvh.primitive_order[start:start + count]
            if not covers(box, aabb_min[prims].min(axis=0), aabb_max[prims].max(axis=0)):
                return False
        else:
            for child in (m0, m1):
                cb = bvh.node_bounds[child]
                if not covers(box, cb[:3], cb[3:]):
                    return False
    return True
