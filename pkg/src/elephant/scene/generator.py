"""Procedural challenge-scene generator.

Reproduces the stress characteristics of large production assets at desk
scale: tiny many-times-instanced objects with overlapping bounds (leaves on
trees), coexisting millimeter- and meter-scale tessellation (terrain vs.
overlay), and a fine surface sitting 1e-3 units above a coarse one (ocean).
Deterministic for a given (spec, seed).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (CurveSet, CurveStyle, DisneyMaterial, FaceTextureRef,
                    CameraDesc, Instance, LightDesc, LightKind, NamedObject,
                    QuadMesh, SceneDesc, ShapeDesc, TriangleMesh,
                    identity_transform)


class SpecOutOfRange(ValueError):
    pass


@dataclass
class GeneratorSpec:
    n_tree_objects: int = 3
    leaves_per_tree: int = 50
    terrain_resolution: int = 16
    fine_overlay: bool = True
    curve_clumps: int = 2
    curve_segments_per_clump: int = 8
    texture_count: int = 0           # FTEX references for the texture-heavy preset
    quad_light: bool = True
    environment: bool = True
    scene_extent: float = 20.0

    def validate(self):
        if self.terrain_resolution < 1:
            raise SpecOutOfRange("terrain_resolution must be >= 1")
        for name in ("n_tree_objects", "leaves_per_tree", "curve_clumps",
                     "curve_segments_per_clump", "texture_count"):
            if getattr(self, name) < 0:
                raise SpecOutOfRange(f"{name} must be >= 0")
        if self.scene_extent <= 0:
            raise SpecOutOfRange("scene_extent must be positive")


@dataclass
class Manifest:
    """Ground truth entity counts recorded while generating."""
    unique_objects: int = 0
    unique_shapes: int = 0
    unique_triangles: int = 0
    unique_quads: int = 0
    unique_curve_segments: int = 0
    instance_count: int = 0
    instanced_triangles: int = 0
    instanced_quads: int = 0
    bounds_min: np.ndarray = field(default_factory=lambda: np.full(3, np.inf))
    bounds_max: np.ndarray = field(default_factory=lambda: np.full(3, -np.inf))


PRESETS = {
    "mini": GeneratorSpec(n_tree_objects=1, leaves_per_tree=8,
                          terrain_resolution=4, fine_overlay=False,
                          curve_clumps=1, curve_segments_per_clump=4),
    "overlap": GeneratorSpec(n_tree_objects=4, leaves_per_tree=400,
                             terrain_resolution=8, fine_overlay=False,
                             curve_clumps=0),
    "tessellation": GeneratorSpec(n_tree_objects=2, leaves_per_tree=20,
                                  terrain_resolution=96, fine_overlay=True,
                                  curve_clumps=2),
    "texture": GeneratorSpec(n_tree_objects=2, leaves_per_tree=30,
                             terrain_resolution=16, fine_overlay=False,
                             curve_clumps=0, texture_count=24),
}


def _paired_grid(nx: int, nz: int, extent: float, heights: np.ndarray,
                 y0: float = 0.0) -> TriangleMesh:
    """Regular grid as paired triangles following the quad export convention."""
    xs = np.linspace(-extent / 2, extent / 2, nx + 1)
    zs = np.linspace(-extent / 2, extent / 2, nz + 1)
    gx, gz = np.meshgrid(xs, zs, indexing="ij")
    pos = np.stack([gx, y0 + heights, gz], axis=-1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(nx), np.arange(nz), indexing="ij")
    a = (i * (nz + 1) + j).ravel()
    b = a + (nz + 1)
    c = b + 1
    d = a + 1
    # quad (a,b,c,d) -> triangles (a,b,c), (a,c,d)
    tris = np.empty((len(a) * 2, 3), np.uint32)
    tris[0::2] = np.stack([a, b, c], axis=1)
    tris[1::2] = np.stack([a, c, d], axis=1)
    return TriangleMesh(positions=pos, indices=tris)


def _tapered_box(base_half: float, top_half: float, height: float) -> TriangleMesh:
    b, t, h = base_half, top_half, height
    pos = np.array([
        [-b, 0, -b], [b, 0, -b], [b, 0, b], [-b, 0, b],
        [-t, h, -t], [t, h, -t], [t, h, t], [-t, h, t],
    ], dtype=np.float32)
    quads = [(0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7),
             (4, 5, 6, 7), (3, 2, 1, 0)]
    tris = []
    for a, bb, c, d in quads:
        tris.append((a, bb, c))
        tris.append((a, c, d))
    return TriangleMesh(positions=pos, indices=np.array(tris, np.uint32))


def _leaf_quad(size: float) -> TriangleMesh:
    s = size / 2
    pos = np.array([[-s, -s, 0], [s, -s, 0], [s, s, 0], [-s, s, 0]], np.float32)
    tris = np.array([[0, 1, 2], [0, 2, 3]], np.uint32)
    return TriangleMesh(positions=pos, indices=tris)


def _grow_bounds(manifest: Manifest, positions: np.ndarray, transform: np.ndarray):
    if len(positions) == 0:
        return
    world = positions.astype(np.float64) @ transform[:3, :3].T + transform[:3, 3]
    manifest.bounds_min = np.minimum(manifest.bounds_min, world.min(axis=0))
    manifest.bounds_max = np.maximum(manifest.bounds_max, world.max(axis=0))


def _translation(x, y, z) -> np.ndarray:
    m = identity_transform()
    m[0, 3], m[1, 3], m[2, 3] = x, y, z
    return m


def generate_challenge_scene(spec: GeneratorSpec, seed: int) -> tuple[SceneDesc, Manifest]:
    spec.validate()
    rng = np.random.default_rng(seed)
    scene = SceneDesc()
    manifest = Manifest()
    ext = spec.scene_extent

    def add_object(name, geoms, material_ref):
        obj = NamedObject(name=name)
        for g in geoms:
            obj.shapes.append(ShapeDesc(geometry=g, material_ref=material_ref))
            manifest.unique_shapes += 1
            if isinstance(g, TriangleMesh):
                manifest.unique_triangles += g.primitive_count
            elif isinstance(g, QuadMesh):
                manifest.unique_quads += g.primitive_count
            else:
                manifest.unique_curve_segments += g.primitive_count
        scene.objects.append(obj)
        manifest.unique_objects += 1
        return len(scene.objects) - 1

    def add_instance(object_ref, transform):
        scene.instances.append(Instance(object_ref=object_ref, transform=transform))
        manifest.instance_count += 1
        obj = scene.objects[object_ref]
        for shape in obj.shapes:
            g = shape.geometry
            if isinstance(g, TriangleMesh):
                manifest.instanced_triangles += g.primitive_count
                _grow_bounds(manifest, g.positions, transform)
            elif isinstance(g, QuadMesh):
                manifest.instanced_quads += g.primitive_count
                _grow_bounds(manifest, g.positions, transform)
            else:
                _grow_bounds(manifest, g.control_points.reshape(-1, 3), transform)

    scene.materials = [
        DisneyMaterial(base_color=np.array([0.65, 0.55, 0.4], np.float32), roughness=0.8),
        DisneyMaterial(base_color=np.array([0.45, 0.3, 0.2], np.float32), roughness=0.7),
        DisneyMaterial(base_color=np.array([0.2, 0.55, 0.2], np.float32), roughness=0.6),
        DisneyMaterial(base_color=np.array([0.2, 0.35, 0.6], np.float32),
                       roughness=0.1, metallic=0.0),
        DisneyMaterial(base_color=np.array([0.3, 0.6, 0.25], np.float32), roughness=0.5),
    ]
    MAT_TERRAIN, MAT_TRUNK, MAT_LEAF, MAT_WATER, MAT_CURVE = range(5)

    if spec.texture_count > 0:
        for i in range(spec.texture_count):
            scene.textures.append(FaceTextureRef(path=f"facetex_{i:03d}.ftex", channels=3))
        # textured variant of the terrain material, bound to the first texture
        scene.materials[MAT_TERRAIN].texture_ref = 0

    # terrain: coarse displaced grid (meter scale)
    n = spec.terrain_resolution
    heights = rng.normal(0.0, 0.15, size=(n + 1, n + 1)) if n > 1 \
        else np.zeros((n + 1, n + 1))
    terrain = _paired_grid(n, n, ext, heights)
    terrain_ref = add_object("terrain", [terrain], MAT_TERRAIN)
    add_instance(terrain_ref, identity_transform())

    # fine overlay: millimeter-ish tessellation offset 1e-3 above a coarse base
    if spec.fine_overlay:
        coarse = _paired_grid(2, 2, ext * 0.6, np.zeros((3, 3)), y0=0.4)
        coarse_ref = add_object("ocean_coarse", [coarse], MAT_WATER)
        add_instance(coarse_ref, identity_transform())
        fine_res = max(4 * n, 8)
        fine = _paired_grid(fine_res, fine_res, ext * 0.6,
                            np.zeros((fine_res + 1, fine_res + 1)), y0=0.4 + 1e-3)
        fine_ref = add_object("ocean_fine", [fine], MAT_WATER)
        add_instance(fine_ref, identity_transform())

    # trees: trunk object plus a tiny leaf object instanced many times with
    # heavily overlapping bounds
    for ti in range(spec.n_tree_objects):
        trunk = _tapered_box(0.2, 0.08, 2.5)
        trunk_ref = add_object(f"tree_{ti}", [trunk], MAT_TRUNK)
        tx, tz = rng.uniform(-ext / 3, ext / 3, size=2)
        add_instance(trunk_ref, _translation(tx, 0.0, tz))
        leaf_ref = add_object(f"leaf_{ti}", [_leaf_quad(0.25)], MAT_LEAF)
        if spec.leaves_per_tree:
            offsets = rng.normal(0.0, 0.5, size=(spec.leaves_per_tree, 3))
            for off in offsets:
                add_instance(leaf_ref,
                             _translation(tx + off[0], 2.5 + off[1], tz + off[2]))

    # grass clumps: cubic spans with sub-millimeter widths
    for ci in range(spec.curve_clumps):
        n_seg = spec.curve_segments_per_clump
        base = rng.uniform(-ext / 3, ext / 3, size=(n_seg, 1, 3)) * [1, 0, 1]
        sway = rng.normal(0, 0.08, size=(n_seg, 3, 3))
        cps = np.concatenate([base, base + [[0, 0.15, 0]] + sway[:, 0:1],
                              base + [[0, 0.3, 0]] + sway[:, 1:2],
                              base + [[0, 0.45, 0]] + sway[:, 2:3]], axis=1)
        widths = np.full((n_seg, 4), 0.01)
        widths[:, 3] = 0.002
        curves = CurveSet(control_points=cps, widths=widths, style=CurveStyle.FLAT)
        curve_ref = add_object(f"grass_{ci}", [curves], MAT_CURVE)
        add_instance(curve_ref, identity_transform())

    if spec.environment:
        scene.lights.append(LightDesc(kind=LightKind.ENVIRONMENT,
                                      env_constant=np.array([0.5, 0.6, 0.8], np.float32)))
    if spec.quad_light:
        h = ext * 0.6
        s = ext * 0.15
        corners = np.array([[-s, h, -s], [s, h, -s], [s, h, s], [-s, h, s]], np.float32)
        key = QuadMesh(positions=corners,
                       indices=np.array([[0, 1, 2, 3]], np.uint32))
        light_ref = add_object("light:key", [key], MAT_TERRAIN)
        add_instance(light_ref, identity_transform())
        scene.lights.append(LightDesc(kind=LightKind.QUAD_AREA, corners=corners,
                                      radiance=np.array([8.0, 8.0, 8.0], np.float32)))

    scene.camera = CameraDesc(
        position=np.array([0.0, ext * 0.25, ext * 0.7], np.float32),
        look_at=np.array([0.0, 1.0, 0.0], np.float32),
        up=np.array([0.0, 1.0, 0.0], np.float32),
        fov_y=50.0, aspect=1.0, width=256, height=256)
    return scene, manifest


def write_scene_textures(scene: SceneDesc, out_dir: str, seed: int = 0,
                         face_res: int = 16) -> list[str]:
    """Synthesize the face-texture files a generated scene references.

    Every referenced file gets enough faces to cover the largest primitive
    count in the scene, so any geometry can bind to it.
    """
    import os

    from ..shade.facetex import write_ftex

    if not scene.textures:
        return []
    faces_needed = 1
    for obj in scene.objects:
        for shape in obj.shapes:
            faces_needed = max(faces_needed, shape.geometry.primitive_count)
    rng = np.random.default_rng(seed)
    paths = []
    for ref in scene.textures:
        base = rng.uniform(0.2, 0.8, size=3)
        faces = []
        for fi in range(faces_needed):
            gy, gx = np.mgrid[0:face_res, 0:face_res] / (face_res - 1)
            tint = 0.15 * np.sin(2 * np.pi * (gx * ((fi % 5) + 1)
                                              + gy * ((fi % 3) + 1)))
            tex = np.clip(base + tint[:, :, None]
                          + rng.normal(0, 0.02, (face_res, face_res, 3)),
                          0.0, 1.0)
            faces.append(tex)
        path = os.path.join(out_dir, ref.path)
        write_ftex(path, faces, encoding=0)
        paths.append(path)
    return paths
