"""Reconstruct quads from the triangle-pair export convention.

Consecutive triangles (2i, 2i+1) of the form (a,b,c),(a,c,d) share the a-c
diagonal and merge back into quad (a,b,c,d). The quad's face ID is its quad
index, so per-face texturing keeps working without any remap arrays.
"""
from __future__ import annotations

import numpy as np

from ..scene.model import QuadMesh, SceneDesc, ShapeDesc, TriangleMesh
from .errors import NotPaired


def merge_triangle_pairs(mesh: TriangleMesh) -> QuadMesh:
    """Merge paired triangles into quads; raises NotPaired on violation."""
    tris = mesh.indices
    if len(tris) % 2 != 0:
        raise NotPaired(len(tris) - 1)
    even = tris[0::2]
    odd = tris[1::2]
    # convention: (a,b,c) followed by (a,c,d)
    ok = (even[:, 0] == odd[:, 0]) & (even[:, 2] == odd[:, 1])
    if not ok.all():
        raise NotPaired(int(np.argmin(ok)) * 2)
    quads = np.stack([even[:, 0], even[:, 1], even[:, 2], odd[:, 2]], axis=1)
    return QuadMesh(positions=mesh.positions, indices=quads)


def merge_scene_quads(scene: SceneDesc) -> int:
    """Merge every mergeable triangle mesh in place; returns merge count.

    Meshes violating the pairing convention are left as triangle meshes.
    """
    merged = 0
    for obj in scene.objects:
        for i, shape in enumerate(obj.shapes):
            if isinstance(shape.geometry, TriangleMesh) and len(shape.geometry.indices):
                try:
                    quads = merge_triangle_pairs(shape.geometry)
                except NotPaired:
                    continue
                obj.shapes[i] = ShapeDesc(geometry=quads, material_ref=shape.material_ref)
                merged += 1
    return merged
