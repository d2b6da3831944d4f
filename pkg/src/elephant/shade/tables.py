"""Precomputed energy tables for the BSDF.

Two families of tables, both built by deterministic quadrature at import-free
lazy cost (a fraction of a second, cached per process):

* GGX directional albedo. E_white(mu, r) is the albedo of the Fresnel-free
  specular lobe; E_bias(mu, r) weights each sample by (1 - cos_d)^5, so the
  Schlick-Fresnel albedo is E_F = F0 * (E_white - E_bias) + E_bias for any F0
  without tabulating over F0. Estimated by importance sampling the visible
  normal distribution, where the integrand collapses to G2/G1.

* Burley diffuse normalization n(mu, r). The retro-reflective diffuse kernel
  B is not energy-normalized; dividing by n(mu_o) * n(mu_i) keeps reciprocity
  while driving the kernel's azimuth-averaged albedo to 1 for every outgoing
  angle. n is found by fixed-point iteration on the quadrature grid.
"""
from __future__ import annotations

import numpy as np

N_MU = 64
N_ROUGH = 32
_SQRT_SAMPLES = 64  # stratified 64x64 unit square per table cell

MIN_ALPHA = 1e-6


def roughness_to_alpha(roughness):
    # roughness is clamped to 1e-3 so there are no delta lobes
    r = np.maximum(np.asarray(roughness, np.float64), 1e-3)
    return np.maximum(r ** 2, MIN_ALPHA)


def _stratified_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Centered stratified samples of the unit square, flattened."""
    edges = (np.arange(n) + 0.5) / n
    u1, u2 = np.meshgrid(edges, edges, indexing="ij")
    return u1.ravel(), u2.ravel()


def sample_vndf(wo: np.ndarray, alpha, u1, u2) -> np.ndarray:
    """Sample GGX visible normals (Heitz 2018). wo: (n,3) unit, z-up."""
    alpha = np.broadcast_to(np.asarray(alpha, np.float64), wo.shape[:-1])
    vh = wo * np.stack([alpha, alpha, np.ones_like(alpha)], axis=-1)
    vh = vh / np.linalg.norm(vh, axis=-1, keepdims=True)
    lensq = vh[..., 0] ** 2 + vh[..., 1] ** 2
    inv = 1.0 / np.sqrt(np.maximum(lensq, 1e-30))
    t1 = np.where(lensq[..., None] > 1e-20,
                  np.stack([-vh[..., 1] * inv, vh[..., 0] * inv,
                            np.zeros_like(inv)], axis=-1),
                  np.array([1.0, 0.0, 0.0]))
    t2 = np.cross(vh, t1)
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    p1 = r * np.cos(phi)
    p2 = r * np.sin(phi)
    s = 0.5 * (1.0 + vh[..., 2])
    p2 = (1.0 - s) * np.sqrt(np.maximum(1.0 - p1 ** 2, 0.0)) + s * p2
    p3 = np.sqrt(np.maximum(1.0 - p1 ** 2 - p2 ** 2, 0.0))
    nh = p1[..., None] * t1 + p2[..., None] * t2 + p3[..., None] * vh
    h = nh.copy()
    h[..., 0] *= alpha
    h[..., 1] *= alpha
    h[..., 2] = np.maximum(h[..., 2], 1e-12)
    return h / np.linalg.norm(h, axis=-1, keepdims=True)


def smith_lambda(mu, alpha):
    mu = np.clip(np.asarray(mu, np.float64), 1e-9, 1.0)
    tan2 = (1.0 - mu ** 2) / mu ** 2
    return 0.5 * (-1.0 + np.sqrt(1.0 + alpha ** 2 * tan2))


def _albedo_row(mu_o: float, alpha: float, u1, u2) -> tuple[float, float]:
    """(E_white, E_bias) for one outgoing angle by VNDF quadrature."""
    n = len(u1)
    so = np.sqrt(max(1.0 - mu_o ** 2, 0.0))
    wo = np.broadcast_to(np.array([so, 0.0, mu_o]), (n, 3))
    h = sample_vndf(wo, alpha, u1, u2)
    cos_d = np.sum(wo * h, axis=-1)
    wi = 2.0 * cos_d[:, None] * h - wo
    up = wi[:, 2] > 0.0
    lo = smith_lambda(mu_o, alpha)
    li = smith_lambda(np.abs(wi[:, 2]), alpha)
    w = np.where(up, (1.0 + lo) / (1.0 + lo + li), 0.0)  # G2/G1
    bias = np.where(up, (1.0 - np.clip(cos_d, 0.0, 1.0)) ** 5, 0.0)
    return float(w.mean()), float((w * bias).mean())


class EnergyTables:
    def __init__(self):
        self.mu = (np.arange(N_MU) + 0.5) / N_MU
        self.rough = np.linspace(0.0, 1.0, N_ROUGH)
        u1, u2 = _stratified_grid(_SQRT_SAMPLES)
        ew = np.empty((N_ROUGH, N_MU))
        eb = np.empty((N_ROUGH, N_MU))
        for ri, r in enumerate(self.rough):
            a = float(roughness_to_alpha(r))
            for mi, m in enumerate(self.mu):
                ew[ri, mi], eb[ri, mi] = _albedo_row(float(m), a, u1, u2)
        self.e_white = ew
        self.e_bias = eb
        # hemispherical averages: E_avg = 2 * integral E(mu) mu dmu
        wgt = 2.0 * self.mu / N_MU
        self.e_white_avg = ew @ wgt
        self.e_bias_avg = eb @ wgt
        # resample the per-roughness normalization onto the uniform mu grid so
        # the generic bilinear lookup applies
        n_gl = _burley_normalization(self.rough)
        self.burley_n = np.stack([np.interp(self.mu, _GL_NODES, row)
                                  for row in n_gl])

    def _interp_mu(self, table_row, mu):
        return np.interp(mu, self.mu, table_row)

    def lookup(self, table: np.ndarray, mu, roughness) -> np.ndarray:
        """Bilinear lookup in (roughness, mu); clamped at the edges."""
        mu = np.clip(np.asarray(mu, np.float64), self.mu[0], 1.0)
        r = np.clip(np.asarray(roughness, np.float64), 0.0, 1.0)
        ri = np.clip(r * (N_ROUGH - 1), 0, N_ROUGH - 1 - 1e-9)
        r0 = ri.astype(np.int64)
        rf = ri - r0
        mi = np.clip((mu - self.mu[0]) / (self.mu[1] - self.mu[0]), 0, N_MU - 1 - 1e-9)
        m0 = mi.astype(np.int64)
        mf = mi - m0
        v00 = table[r0, m0]
        v01 = table[r0, m0 + 1]
        v10 = table[r0 + 1, m0]
        v11 = table[r0 + 1, m0 + 1]
        return ((1 - rf) * ((1 - mf) * v00 + mf * v01)
                + rf * ((1 - mf) * v10 + mf * v11))

    def lookup_avg(self, avg_row: np.ndarray, roughness) -> np.ndarray:
        return np.interp(np.clip(roughness, 0.0, 1.0), self.rough, avg_row)

    def e_schlick(self, mu, roughness, f0) -> np.ndarray:
        """Directional albedo of the Fresnel-weighted specular lobe."""
        ew = self.lookup(self.e_white, mu, roughness)
        eb = self.lookup(self.e_bias, mu, roughness)
        return np.asarray(f0) * (ew - eb) + eb

    def e_schlick_avg(self, roughness, f0) -> np.ndarray:
        ew = self.lookup_avg(self.e_white_avg, roughness)
        eb = self.lookup_avg(self.e_bias_avg, roughness)
        return np.asarray(f0) * (ew - eb) + eb

    def burley_norm(self, mu, roughness) -> np.ndarray:
        """n(mu, roughness): divide the Burley kernel by n(mu_o) n(mu_i)."""
        return self.lookup(self.burley_n, mu, roughness)


_N_GL = 32
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_N_GL)
_GL_NODES = 0.5 * (_GL_X + 1.0)   # mu in (0, 1)
_GL_WEIGHTS = 0.5 * _GL_W


def burley_fd90(roughness, cos_d):
    return 0.5 + 2.0 * np.asarray(roughness, np.float64) * np.asarray(cos_d) ** 2


def burley_kernel(mu_o, mu_i, roughness, cos_d):
    """Retro-reflective factor of the diffuse lobe (symmetric in o/i)."""
    fd90 = burley_fd90(roughness, cos_d)
    fo = 1.0 + (fd90 - 1.0) * (1.0 - mu_o) ** 5
    fi = 1.0 + (fd90 - 1.0) * (1.0 - mu_i) ** 5
    return fo * fi


def _azimuth_avg_kernel(roughness: float) -> np.ndarray:
    """B_bar[i, j]: Burley kernel averaged over relative azimuth, on GL nodes."""
    n_phi = 64
    phi = (np.arange(n_phi) + 0.5) / n_phi * 2.0 * np.pi
    mo = _GL_NODES[:, None, None]
    mi = _GL_NODES[None, :, None]
    so = np.sqrt(1.0 - mo ** 2)
    si = np.sqrt(1.0 - mi ** 2)
    cos_io = mo * mi + so * si * np.cos(phi)[None, None, :]
    # |wo + wi|^2 = 2 + 2 cos; cos_d = (mu_o + mu_i)/|wo + wi| via h.z symmetry?
    # cos_d is wo.h with h the half vector: wo.h = |wo + wi| / 2
    half_len = np.sqrt(np.maximum(2.0 + 2.0 * cos_io, 1e-12))
    cos_d = half_len * 0.5
    b = burley_kernel(mo, mi, roughness, np.clip(cos_d, 0.0, 1.0))
    return b.mean(axis=2)


def _burley_normalization(rough_grid: np.ndarray) -> np.ndarray:
    """n(mu) per roughness s.t. the normalized kernel has unit albedo."""
    out = np.empty((len(rough_grid), _N_GL))
    for ri, r in enumerate(rough_grid):
        bbar = _azimuth_avg_kernel(float(r))
        n = np.ones(_N_GL)
        for _ in range(60):
            # albedo(mu_o) = 2 * sum_j Bbar/(n_o n_j) mu_j w_j
            alb = 2.0 * (bbar / n[None, :] / n[:, None]) @ (_GL_NODES * _GL_WEIGHTS)
            n = n * np.sqrt(alb)
        out[ri] = n
    return out


_CACHE: dict[str, EnergyTables] = {}


def get_tables() -> EnergyTables:
    if "t" not in _CACHE:
        _CACHE["t"] = EnergyTables()
    return _CACHE["t"]
