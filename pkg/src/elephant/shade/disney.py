"""Principled BSDF: Burley diffuse + GGX specular + clearcoat + sheen.

Vectorized over batches of shading points in the local frame (z = shading
normal). Energy behavior:

* the specular lobe carries a Kulla-Conty multiple-scattering term built from
  the precomputed albedo tables, so a white metal reflects ~all energy at any
  roughness;
* the diffuse lobe is normalized (Burley retro factor divided by a symmetric
  n(mu_o) n(mu_i) table) and coupled to the specular albedo with the
  Kelemen-style weight (1-S(mu_o)) (1-S(mu_i)) / (1-S_avg), so white
  dielectrics also sum to ~1 without double counting.

`sample` draws from a mixture (specular VNDF / cosine / clearcoat GTR1) and
then calls `evaluate` for the returned value and pdf, which makes
sample/evaluate consistency exact by construction. All lobes are reciprocal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scene.model import DisneyMaterial
from .tables import burley_kernel, get_tables, roughness_to_alpha, sample_vndf, smith_lambda

_LUM = np.array([0.2126, 0.7152, 0.0722])
MIN_COS = 1e-7


@dataclass
class MaterialBatch:
    """Per-shading-point material parameters as (n, ...) float64 arrays."""
    base_color: np.ndarray
    metallic: np.ndarray
    roughness: np.ndarray
    specular: np.ndarray
    specular_tint: np.ndarray
    sheen: np.ndarray
    sheen_tint: np.ndarray
    clearcoat: np.ndarray
    clearcoat_gloss: np.ndarray
    ior: np.ndarray

    @classmethod
    def from_materials(cls, materials: list[DisneyMaterial],
                       ids: np.ndarray) -> "MaterialBatch":
        ids = np.clip(np.asarray(ids, np.int64), 0, max(len(materials) - 1, 0))
        if not materials:
            materials = [DisneyMaterial()]

        def g(attr):
            return np.array([getattr(m, attr) for m in materials], np.float64)[ids]

        return cls(base_color=np.stack([m.base_color for m in materials]
                                       ).astype(np.float64)[ids],
                   metallic=g("metallic"), roughness=g("roughness"),
                   specular=g("specular"), specular_tint=g("specular_tint"),
                   sheen=g("sheen"), sheen_tint=g("sheen_tint"),
                   clearcoat=g("clearcoat"), clearcoat_gloss=g("clearcoat_gloss"),
                   ior=g("ior"))

    @classmethod
    def constant(cls, material: DisneyMaterial, n: int) -> "MaterialBatch":
        return cls.from_materials([material], np.zeros(n, np.int64))


def _luminance(c: np.ndarray) -> np.ndarray:
    return c @ _LUM


def _schlick5(mu):
    return np.clip(1.0 - mu, 0.0, 1.0) ** 5


def _spec_f0(mat: MaterialBatch) -> np.ndarray:
    """(n,3) reflectance at normal incidence: tinted dielectric -> metal."""
    lum = np.maximum(_luminance(mat.base_color), 1e-8)
    tint = mat.base_color / lum[:, None]
    white = np.ones_like(tint)
    tint_col = white + mat.specular_tint[:, None] * (tint - white)
    # an explicit ior overrides the artist 'specular' control
    f0_ior = ((mat.ior - 1.0) / (mat.ior + 1.0)) ** 2
    f0_scalar = np.where(mat.ior > 1.0, f0_ior, 0.08 * mat.specular)
    dielec = f0_scalar[:, None] * tint_col
    return dielec + mat.metallic[:, None] * (mat.base_color - dielec)


def _spec_albedo(tables, mu, rough, f0):
    """Per-channel directional albedo of specular single + multiple scatter."""
    ew = tables.lookup(tables.e_white, mu, rough)
    ewa = tables.lookup_avg(tables.e_white_avg, rough)
    ef = tables.e_schlick(mu[:, None], rough[:, None], f0)
    f_avg = f0 + (1.0 - f0) / 21.0
    f_ms = f_avg ** 2 * ewa[:, None] / np.maximum(
        1.0 - f_avg * (1.0 - ewa[:, None]), 1e-9)
    # slight under-fill keeps table interpolation error on the conserving side
    f_ms = 0.997 * f_ms
    return ef + f_ms * (1.0 - ew[:, None]), ew, ewa, f_ms


def _spec_albedo_avg(tables, rough, f0, f_ms):
    efa = tables.e_schlick_avg(rough[:, None], f0)
    ewa = tables.lookup_avg(tables.e_white_avg, rough)
    return efa + f_ms * (1.0 - ewa[:, None])


def _gtr1_alpha(mat: MaterialBatch) -> np.ndarray:
    return 0.1 + mat.clearcoat_gloss * (0.001 - 0.1)


def _d_gtr1(mu_h, alpha):
    a2 = alpha ** 2
    denom = np.pi * np.log(a2) * (1.0 + (a2 - 1.0) * mu_h ** 2)
    return (a2 - 1.0) / np.where(np.abs(denom) < 1e-12, 1e-12, denom)


def _d_ggx(mu_h, alpha):
    d = mu_h ** 2 * (alpha ** 2 - 1.0) + 1.0
    return alpha ** 2 / np.maximum(np.pi * d ** 2, 1e-300)


def _lobe_probs(tables, wo_z, mat, f0):
    """Mixture probabilities for (specular, diffuse+ms, clearcoat)."""
    mu = np.maximum(wo_z, MIN_COS)
    f0_lum = np.clip(_luminance(f0), 0.0, 1.0)
    ef = tables.e_schlick(mu, mat.roughness, f0_lum)
    w_spec = np.maximum(ef, 1e-4)
    w_diff = np.maximum((1.0 - mat.metallic) * _luminance(mat.base_color)
                        * (1.0 - ef) + (1.0 - ef) * f0_lum, 1e-4)
    fc = 0.04 + 0.96 * _schlick5(mu)
    w_cc = 0.25 * mat.clearcoat * fc
    total = w_spec + w_diff + w_cc
    return w_spec / total, w_diff / total, w_cc / total


def evaluate(wo: np.ndarray, wi: np.ndarray, mat: MaterialBatch
             ) -> tuple[np.ndarray, np.ndarray]:
    """Returns (f (n,3), pdf (n,)). f is zero outside the upper hemisphere;
    the pdf covers every direction the sampler can propose (including
    specular proposals that land below the horizon)."""
    tables = get_tables()
    wo = np.asarray(wo, np.float64).reshape(-1, 3)
    wi = np.asarray(wi, np.float64).reshape(-1, 3)
    n = len(wo)
    mu_o = wo[:, 2]
    mu_i = wi[:, 2]
    valid_o = mu_o > MIN_COS
    up = mu_i > MIN_COS
    mu_oc = np.maximum(mu_o, MIN_COS)
    mu_ic = np.maximum(np.abs(mu_i), MIN_COS)

    h = wo + wi
    h_len = np.linalg.norm(h, axis=1)
    degenerate = h_len < 1e-12
    h = np.where(degenerate[:, None], np.array([0.0, 0.0, 1.0]), h
                 / np.maximum(h_len, 1e-12)[:, None])
    cos_d = np.clip(np.sum(wo * h, axis=1), 0.0, 1.0)
    mu_h = h[:, 2]

    f0 = _spec_f0(mat)
    alpha = roughness_to_alpha(mat.roughness)

    # specular single scatter
    fres = f0 + (1.0 - f0) * _schlick5(cos_d)[:, None]
    d = _d_ggx(mu_h, alpha)
    lam_o = smith_lambda(mu_oc, alpha)
    lam_i = smith_lambda(mu_ic, alpha)
    g2 = 1.0 / (1.0 + lam_o + lam_i)
    f_spec = fres * (d * g2 / (4.0 * mu_oc * mu_ic))[:, None]

    # specular multiple scatter (Kulla-Conty closure on the white tables)
    s_o, ew_o, ewa, f_ms = _spec_albedo(tables, mu_oc, mat.roughness, f0)
    ew_i = tables.lookup(tables.e_white, mu_ic, mat.roughness)
    f_msl = f_ms * ((1.0 - ew_o) * (1.0 - ew_i)
                    / (np.pi * np.maximum(1.0 - ewa, 1e-9)))[:, None]

    # diffuse, energy-coupled to the specular albedo
    f0_lum = np.clip(_luminance(f0), 0.0, 1.0)
    s_lum_o = _luminance(s_o)
    s_i, _, _, _ = _spec_albedo(tables, mu_ic, mat.roughness, f0)
    s_lum_i = _luminance(s_i)
    s_avg = _luminance(_spec_albedo_avg(tables, mat.roughness, f0, f_ms))
    couple = (np.clip(1.0 - s_lum_o, 0.0, 1.0) * np.clip(1.0 - s_lum_i, 0.0, 1.0)
              / np.maximum(1.0 - s_avg, 1e-9))
    kernel = burley_kernel(mu_oc, mu_ic, mat.roughness, cos_d)
    norm = (tables.burley_norm(mu_oc, mat.roughness)
            * tables.burley_norm(mu_ic, mat.roughness))
    f_diff = (mat.base_color * (1.0 - mat.metallic)[:, None]
              * (kernel / norm * couple)[:, None] / np.pi)

    # sheen: retro tail at the half-vector grazing angle
    lum = np.maximum(_luminance(mat.base_color), 1e-8)
    tint = mat.base_color / lum[:, None]
    csheen = 1.0 + mat.sheen_tint[:, None] * (tint - 1.0)
    f_sheen = (mat.sheen * (1.0 - mat.metallic) * _schlick5(cos_d))[:, None] * csheen

    # clearcoat: GTR1 with fixed 0.04 Fresnel and alpha=0.25 shadowing
    a_cc = _gtr1_alpha(mat)
    d_cc = _d_gtr1(mu_h, a_cc)
    f_c = 0.04 + 0.96 * _schlick5(cos_d)
    lam_o_c = smith_lambda(mu_oc, 0.25)
    lam_i_c = smith_lambda(mu_ic, 0.25)
    g_cc = 1.0 / (1.0 + lam_o_c + lam_i_c)
    f_clear = 0.25 * mat.clearcoat * d_cc * f_c * g_cc / (4.0 * mu_oc * mu_ic)
    # the base is attenuated so adding a coat cannot create energy
    atten = ((1.0 - 0.25 * mat.clearcoat * (0.04 + 0.96 * _schlick5(mu_oc)))
             * (1.0 - 0.25 * mat.clearcoat * (0.04 + 0.96 * _schlick5(mu_ic))))

    f = (f_diff + f_sheen + f_spec + f_msl) * atten[:, None] + f_clear[:, None]
    f = np.where((valid_o & up & ~degenerate)[:, None], f, 0.0)

    # mixture pdf
    p_spec, p_diff, p_cc = _lobe_probs(tables, mu_o, mat, f0)
    g1_o = 1.0 / (1.0 + lam_o)
    dv = g1_o * d * np.maximum(cos_d, 0.0) / mu_oc
    pdf_spec = np.where(mu_h > 0, dv / np.maximum(4.0 * cos_d, 1e-12), 0.0)
    pdf_diff = np.where(up, mu_ic / np.pi, 0.0)
    pdf_cc = np.where(mu_h > 0, d_cc * np.maximum(mu_h, 0.0)
                      / np.maximum(4.0 * cos_d, 1e-12), 0.0)
    pdf = p_spec * pdf_spec + p_diff * pdf_diff + p_cc * pdf_cc
    pdf = np.where(valid_o & ~degenerate, pdf, 0.0)
    return f, pdf


LOBE_SPECULAR = 0
LOBE_DIFFUSE = 1
LOBE_CLEARCOAT = 2


def sample(wo: np.ndarray, mat: MaterialBatch, u: np.ndarray
           ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Draw wi ~ mixture; returns (wi, f, pdf, lobe_tag), f/pdf via `evaluate`.

    u: (n, 3) uniforms — lobe choice, then the 2D sample."""
    tables = get_tables()
    wo = np.asarray(wo, np.float64).reshape(-1, 3)
    u = np.asarray(u, np.float64).reshape(-1, 3)
    n = len(wo)
    f0 = _spec_f0(mat)
    p_spec, p_diff, p_cc = _lobe_probs(tables, wo[:, 2], mat, f0)
    pick_spec = u[:, 0] < p_spec
    pick_cc = u[:, 0] >= p_spec + p_diff
    pick_diff = ~pick_spec & ~pick_cc

    wi = np.zeros((n, 3))
    # specular: reflect about a visible GGX normal
    alpha = roughness_to_alpha(mat.roughness)
    h = sample_vndf(wo, alpha, u[:, 1], u[:, 2])
    wi_spec = 2.0 * np.sum(wo * h, axis=1)[:, None] * h - wo
    # diffuse: cosine hemisphere
    r = np.sqrt(u[:, 1])
    phi = 2.0 * np.pi * u[:, 2]
    wi_diff = np.stack([r * np.cos(phi), r * np.sin(phi),
                        np.sqrt(np.maximum(1.0 - u[:, 1], 0.0))], axis=1)
    # clearcoat: GTR1 normal
    a2 = _gtr1_alpha(mat) ** 2
    cos2 = (1.0 - a2 ** (1.0 - u[:, 1])) / np.maximum(1.0 - a2, 1e-12)
    mu_h = np.sqrt(np.clip(cos2, 0.0, 1.0))
    sin_h = np.sqrt(np.clip(1.0 - cos2, 0.0, 1.0))
    h_cc = np.stack([sin_h * np.cos(phi), sin_h * np.sin(phi), mu_h], axis=1)
    wi_cc = 2.0 * np.sum(wo * h_cc, axis=1)[:, None] * h_cc - wo

    wi[pick_spec] = wi_spec[pick_spec]
    wi[pick_diff] = wi_diff[pick_diff]
    wi[pick_cc] = wi_cc[pick_cc]
    wi = wi / np.maximum(np.linalg.norm(wi, axis=1, keepdims=True), 1e-12)
    lobe = np.where(pick_spec, LOBE_SPECULAR,
                    np.where(pick_cc, LOBE_CLEARCOAT, LOBE_DIFFUSE)).astype(np.int32)
    f, pdf = evaluate(wo, wi, mat)
    return wi, f, pdf, lobe
