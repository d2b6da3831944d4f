"""Counter-based deterministic sampler.

Every sample dimension is a pure hash of (seed, pixelX, pixelY,
globalSampleIndex, dimension), so results do not depend on tile scheduling,
thread count, or how many frames the sample stream is split across:
frame f at s spp consumes global sample indices f*s .. f*s+s-1, which makes
two 1-spp frames accumulate bit-identically to one 2-spp frame.
"""
from __future__ import annotations

import numpy as np

_C1 = np.uint64(0x9E3779B97F4A7C15)
_C2 = np.uint64(0xBF58476D1CE4E5B9)
_C3 = np.uint64(0x94D049BB133111EB)


def _mix(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * _C2
    x = (x ^ (x >> np.uint64(27))) * _C3
    return x ^ (x >> np.uint64(31))


def sample_u64(seed, px, py, gsi, dim) -> np.ndarray:
    """Vectorized 64-bit hash; all arguments broadcast."""
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(seed, np.uint64) + _C1)
        h = _mix(h ^ (np.asarray(px, np.uint64) * _C1 + _C2))
        h = _mix(h ^ (np.asarray(py, np.uint64) * _C2 + _C3))
        h = _mix(h ^ (np.asarray(gsi, np.uint64) * _C3 + _C1))
        h = _mix(h ^ (np.asarray(dim, np.uint64) * _C1 + _C3))
    return h


def sample_1d(seed, px, py, gsi, dim) -> np.ndarray:
    """Uniform in [0, 1), 53-bit resolution."""
    return (sample_u64(seed, px, py, gsi, dim) >> np.uint64(11)) * (2.0 ** -53)


# dimension layout per path vertex
DIM_PIXEL_X = 0
DIM_PIXEL_Y = 1
DIMS_PER_BOUNCE = 8
DIM_LIGHT_PICK = 0
DIM_LIGHT_U = 1
DIM_LIGHT_V = 2
DIM_LOBE = 3
DIM_BSDF_U = 4
DIM_BSDF_V = 5
DIM_RR = 6


def bounce_dim(depth: int, which: int) -> int:
    return 2 + depth * DIMS_PER_BOUNCE + which
