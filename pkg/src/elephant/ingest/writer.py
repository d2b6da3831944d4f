"""Emit a SceneDesc as PBRT-subset text (the ASCII side of the load benchmark).

Floats are written with shortest-roundtrip float32 reprs so converting the
text back to binary is lossless.
"""
from __future__ import annotations

import numpy as np

from ..scene.model import (CurveSet, CurveStyle, LightKind, QuadMesh,
                           SceneDesc, TriangleMesh)

LIGHT_OBJECT_PREFIX = "light:"


def _fmt_floats(arr: np.ndarray) -> str:
    return " ".join(map(str, np.ascontiguousarray(arr, np.float32).reshape(-1)))


def _fmt_ints(arr: np.ndarray) -> str:
    return " ".join(map(str, np.ascontiguousarray(arr, np.int64).reshape(-1).tolist()))


def _material_params(m) -> str:
    parts = [f'"rgb basecolor" [{_fmt_floats(m.base_color)}]']
    for pname, attr in (("metallic", "metallic"), ("roughness", "roughness"),
                        ("spec", "specular"), ("spectint", "specular_tint"),
                        ("sheen", "sheen"), ("sheentint", "sheen_tint"),
                        ("clearcoat", "clearcoat"), ("clearcoatgloss", "clearcoat_gloss"),
                        ("ior", "ior")):
        parts.append(f'"float {pname}" [{np.float32(getattr(m, attr))}]')
    return " ".join(parts)


def _shape_text(shape) -> str:
    g = shape.geometry
    if isinstance(g, TriangleMesh):
        out = (f'Shape "trianglemesh" "point P" [{_fmt_floats(g.positions)}] '
               f'"integer indices" [{_fmt_ints(g.indices)}]')
        if g.normals is not None:
            out += f' "normal N" [{_fmt_floats(g.normals)}]'
        return out
    if isinstance(g, QuadMesh):
        return (f'Shape "quadmesh" "point P" [{_fmt_floats(g.positions)}] '
                f'"integer indices" [{_fmt_ints(g.indices)}]')
    assert isinstance(g, CurveSet)
    style = "flat" if g.style == CurveStyle.FLAT else "round"
    w0 = float(g.widths[0, 0]) if len(g.widths) else 1.0
    w1 = float(g.widths[0, 3]) if len(g.widths) else 1.0
    return (f'Shape "curve" "string type" "{style}" '
            f'"float width0" [{np.float32(w0)}] "float width1" [{np.float32(w1)}] '
            f'"point P" [{_fmt_floats(g.control_points)}]')


def write_pbrt(scene: SceneDesc, sink) -> None:
    w = sink.write
    cam = scene.camera
    w(f"LookAt {_fmt_floats(cam.position)}  {_fmt_floats(cam.look_at)}"
      f"  {_fmt_floats(cam.up)}\n")
    w(f'Camera "perspective" "float fov" [{np.float32(cam.fov_y)}]\n')
    w(f'Film "image" "integer xresolution" [{cam.width}] '
      f'"integer yresolution" [{cam.height}]\n')
    w("WorldBegin\n")
    for i, tex in enumerate(scene.textures):
        w(f'Texture "tex{i}" "color" "facetex" "string filename" "{tex.path}"\n')
    for i, m in enumerate(scene.materials):
        params = _material_params(m)
        if m.texture_ref >= 0:
            params += f' "texture basecolor" "tex{m.texture_ref}"'
        w(f'MakeNamedMaterial "mat{i}" "string type" "disney" {params}\n')
    for light in scene.lights:
        if light.kind == LightKind.ENVIRONMENT:
            rgb = _fmt_floats(light.env_constant)
            if light.env_map_path:
                w(f'LightSource "infinite" "rgb L" [{rgb}] '
                  f'"string mapname" "{light.env_map_path}"\n')
            else:
                w(f'LightSource "infinite" "rgb L" [{rgb}]\n')

    light_objects = {i for i, obj in enumerate(scene.objects)
                     if obj.name.startswith(LIGHT_OBJECT_PREFIX)}
    light_radiance = {}
    li = 0
    for i in sorted(light_objects):
        quad_lights = [l for l in scene.lights if l.kind == LightKind.QUAD_AREA]
        if li < len(quad_lights):
            light_radiance[i] = quad_lights[li].radiance
            li += 1

    for i, obj in enumerate(scene.objects):
        if i in light_objects:
            continue
        w(f'ObjectBegin "{obj.name}"\n')
        for shape in obj.shapes:
            w(f'NamedMaterial "mat{shape.material_ref}"\n')
            w(_shape_text(shape))
            w("\n")
        w("ObjectEnd\n")
    for inst in scene.instances:
        if inst.object_ref in light_objects:
            continue
        m = np.eye(4, dtype=np.float64)
        m[:3, :4] = inst.transform.astype(np.float64)
        w("TransformBegin\n")
        w(f"Transform [{_fmt_floats(m.T.astype(np.float32))}]\n")  # column-major
        w(f'ObjectInstance "{scene.objects[inst.object_ref].name}"\n')
        w("TransformEnd\n")
    for i in sorted(light_objects):
        obj = scene.objects[i]
        radiance = light_radiance.get(i, np.ones(3, np.float32))
        w("AttributeBegin\n")
        w(f'AreaLightSource "diffuse" "rgb L" [{_fmt_floats(radiance)}]\n')
        for shape in obj.shapes:
            w(f'NamedMaterial "mat{shape.material_ref}"\n')
            w(_shape_text(shape))
            w("\n")
        w("AttributeEnd\n")
    w("WorldEnd\n")


def write_pbrt_file(scene: SceneDesc, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        write_pbrt(scene, f)
