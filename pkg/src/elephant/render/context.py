"""Everything a render needs, built once per scene: the compiled
acceleration structure, light list, emissive-primitive lookup, camera rays,
and the shared face-texture cache."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..accel import TwoLevelAccel
from ..scene.model import LightKind, QuadMesh, SceneDesc
from ..shade.facetex import FaceTextureCache
from ..shade.lights import validate_quad_light


@dataclass
class RenderContext:
    scene: SceneDesc
    accel: TwoLevelAccel
    quad_lights: list
    env_light: object | None
    # sorted packed (instance, geom, prim) keys -> index into quad_lights
    emissive_keys: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint64))
    emissive_light: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int32))
    texture_cache: FaceTextureCache | None = None
    texture_paths: list[str] = field(default_factory=list)
    firefly_clamps: int = 0

    @property
    def n_light_strategies(self) -> int:
        return len(self.quad_lights) + (1 if self.env_light is not None else 0)


def _pack_key(inst, geom, prim) -> np.ndarray:
    return (np.asarray(inst, np.uint64) << np.uint64(40)) \
        | (np.asarray(geom, np.uint64) << np.uint64(28)) \
        | np.asarray(prim, np.uint64)


def _match_emissive(scene: SceneDesc, quad_lights) -> tuple[np.ndarray, np.ndarray]:
    """Locate each quad light's geometry as (instance, geom, prim)."""
    keys, lids = [], []
    for li, light in enumerate(quad_lights):
        target = light.corners.astype(np.float64)
        found = False
        for ii, inst in enumerate(scene.instances):
            obj = scene.objects[inst.object_ref]
            lin = inst.transform[:, :3].astype(np.float64)
            trans = inst.transform[:, 3].astype(np.float64)
            for gi, shape in enumerate(obj.shapes):
                g = shape.geometry
                if not isinstance(g, QuadMesh):
                    continue
                world = g.positions.astype(np.float64) @ lin.T + trans
                for pi, quad in enumerate(g.indices):
                    if np.allclose(world[quad], target, atol=1e-4):
                        keys.append(int(_pack_key(ii, gi, pi)))
                        lids.append(li)
                        found = True
                        break
                if found:
                    break
            if found:
                break
    keys = np.array(keys, np.uint64)
    lids = np.array(lids, np.int32)
    order = np.argsort(keys)
    return keys[order], lids[order]


def build_context(scene: SceneDesc, base_dir: str = ".",
                  texture_cache: FaceTextureCache | None = None,
                  segments_per_span: int = 8) -> RenderContext:
    accel = TwoLevelAccel.from_scene(scene, segments_per_span)
    quad_lights = [l for l in scene.lights if l.kind == LightKind.QUAD_AREA]
    for l in quad_lights:
        validate_quad_light(l)
    envs = [l for l in scene.lights if l.kind == LightKind.ENVIRONMENT]
    keys, lids = _match_emissive(scene, quad_lights)
    paths = [os.path.join(base_dir, t.path) for t in scene.textures]
    cache = texture_cache
    if cache is None and scene.textures:
        cache = FaceTextureCache()
    return RenderContext(scene=scene, accel=accel, quad_lights=quad_lights,
                         env_light=envs[0] if envs else None,
                         emissive_keys=keys, emissive_light=lids,
                         texture_cache=cache, texture_paths=paths)


def emissive_lookup(ctx: RenderContext, inst, geom, prim) -> np.ndarray:
    """Light index per hit, -1 for non-emissive primitives. Vectorized."""
    out = np.full(len(np.atleast_1d(inst)), -1, np.int32)
    if len(ctx.emissive_keys) == 0:
        return out
    key = _pack_key(np.maximum(inst, 0), np.maximum(geom, 0), np.maximum(prim, 0))
    pos = np.searchsorted(ctx.emissive_keys, key)
    pos = np.clip(pos, 0, len(ctx.emissive_keys) - 1)
    match = ctx.emissive_keys[pos] == key
    out[match] = ctx.emissive_light[pos[match]]
    return out


def camera_rays(scene: SceneDesc, px, py, jx, jy,
                width: int | None = None, height: int | None = None
                ) -> tuple[np.ndarray, np.ndarray]:
    """Primary rays through pixel samples (px + jx, py + jy), world space."""
    cam = scene.camera
    w = width if width is not None else cam.width
    h = height if height is not None else cam.height
    pos = cam.position.astype(np.float64)
    fwd = cam.look_at.astype(np.float64) - pos
    fwd = fwd / max(np.linalg.norm(fwd), 1e-12)
    right = np.cross(fwd, cam.up.astype(np.float64))
    right = right / max(np.linalg.norm(right), 1e-12)
    up = np.cross(right, fwd)
    tan_half = np.tan(np.deg2rad(cam.fov_y) * 0.5)
    aspect = w / h
    sx = ((np.asarray(px) + jx) / w * 2.0 - 1.0) * tan_half * aspect
    sy = (1.0 - (np.asarray(py) + jy) / h * 2.0) * tan_half
    d = fwd + sx[..., None] * right + sy[..., None] * up
    d = d / np.linalg.norm(d, axis=-1, keepdims=True)
    origins = np.broadcast_to(pos, d.shape).copy()
    return origins, d
