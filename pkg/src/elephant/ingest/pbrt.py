"""Streaming parser for the supported PBRT directive subset.

The parser is single pass with explicit attribute/transform stacks. Numeric
bracket arrays are parsed in bulk with numpy so large geometry blocks do not
go through per-token Python code.
"""
from __future__ import annotations

import bisect
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..scene.model import (CameraDesc, CurveSet, CurveStyle, DisneyMaterial,
                           FaceTextureRef, Instance, LightDesc, LightKind,
                           NamedObject, QuadMesh, SceneDesc, ShapeDesc,
                           TriangleMesh, identity_transform)
from .errors import (MissingInclude, PbrtSyntaxError, UnbalancedBlock,
                     UnsupportedDirective)

MAX_INCLUDE_DEPTH = 16

_WS = " \t\r\n"
_DELIM = set(_WS) | {"[", "]", '"', "#"}

SUPPORTED_DIRECTIVES = {
    "Include", "AttributeBegin", "AttributeEnd", "TransformBegin",
    "TransformEnd", "ObjectBegin", "ObjectEnd", "ObjectInstance",
    "Translate", "Rotate", "Scale", "Transform", "ConcatTransform", "LookAt",
    "Camera", "Film", "Shape", "MakeNamedMaterial", "NamedMaterial",
    "Material", "Texture", "LightSource", "AreaLightSource",
    "WorldBegin", "WorldEnd",
}


class _Scanner:
    """Hand-rolled token scanner; bracket arrays are sliced out wholesale."""

    def __init__(self, text: str, name: str = "<stream>"):
        self.text = text
        self.pos = 0
        self.name = name
        self._pending: str | None = None
        self._newlines: list[int] | None = None

    def line(self, pos: int | None = None) -> int:
        if self._newlines is None:
            self._newlines = [i for i, c in enumerate(self.text) if c == "\n"]
        return bisect.bisect_right(self._newlines, (self.pos if pos is None else pos) - 1) + 1

    def _skip_ws(self):
        text, n = self.text, len(self.text)
        i = self.pos
        while i < n:
            c = text[i]
            if c in _WS:
                i += 1
            elif c == "#":
                j = text.find("\n", i)
                i = n if j < 0 else j + 1
            else:
                break
        self.pos = i

    def next(self) -> str | None:
        """Next raw token; quoted strings come back with surrounding quotes."""
        if self._pending is not None:
            tok, self._pending = self._pending, None
            return tok
        self._skip_ws()
        text, n = self.text, len(self.text)
        if self.pos >= n:
            return None
        c = text[self.pos]
        if c == '"':
            end = text.find('"', self.pos + 1)
            if end < 0:
                raise PbrtSyntaxError(self.line(), "closing quote")
            tok = text[self.pos:end + 1]
            self.pos = end + 1
            return tok
        if c in "[]":
            self.pos += 1
            return c
        start = self.pos
        i = start
        while i < n and text[i] not in _DELIM:
            i += 1
        self.pos = i
        return text[start:i]

    def push_back(self, tok: str):
        assert self._pending is None
        self._pending = tok

    def bracket_slice(self) -> str:
        """Consume from after '[' to the matching ']' and return raw text."""
        end = self.text.find("]", self.pos)
        if end < 0:
            raise UnbalancedBlock(self.line(), "bracket")
        chunk = self.text[self.pos:end]
        self.pos = end + 1
        return chunk


def _numbers_from_text(chunk: str) -> np.ndarray:
    return np.array(chunk.split(), dtype=np.float64)


@dataclass
class _Params:
    """Parsed PBRT parameter list: name -> (type, value)."""
    items: dict = field(default_factory=dict)

    def get_floats(self, name, default=None):
        if name not in self.items:
            return default
        return np.asarray(self.items[name][1], dtype=np.float64)

    def get_float(self, name, default=None):
        v = self.get_floats(name)
        return default if v is None else float(v.reshape(-1)[0])

    def get_ints(self, name, default=None):
        if name not in self.items:
            return default
        return np.asarray(self.items[name][1], dtype=np.int64)

    def get_string(self, name, default=None):
        if name not in self.items:
            return default
        v = self.items[name][1]
        return v[0] if isinstance(v, list) else v

    def get_texture(self, name, default=None):
        if name in self.items and self.items[name][0] == "texture":
            v = self.items[name][1]
            return v[0] if isinstance(v, list) else v
        return default


_NUMERIC_TYPES = {"float", "integer", "point", "point3", "point2", "normal",
                  "vector", "rgb", "color", "blackbody", "spectrum", "bool"}


def _read_params(sc: _Scanner) -> _Params:
    params = _Params()
    while True:
        tok = sc.next()
        if tok is None:
            break
        if not (tok.startswith('"') and " " in tok):
            sc.push_back(tok)
            break
        decl = tok[1:-1].split()
        if len(decl) != 2:
            raise PbrtSyntaxError(sc.line(), "'type name' parameter declaration")
        ptype, pname = decl
        nxt = sc.next()
        if nxt == "[":
            if ptype in ("string", "texture"):
                vals = []
                while True:
                    t = sc.next()
                    if t == "]":
                        break
                    if t is None:
                        raise UnbalancedBlock(sc.line(), "bracket")
                    vals.append(t.strip('"'))
                value = vals
            elif ptype == "bool":
                raw = sc.bracket_slice()
                value = np.array([1.0 if s.strip('"') == "true" else 0.0
                                  for s in raw.split()])
            else:
                value = _numbers_from_text(sc.bracket_slice())
        elif nxt is None:
            raise PbrtSyntaxError(sc.line(), "parameter value")
        elif nxt.startswith('"'):
            value = [nxt.strip('"')]
        elif ptype == "bool":
            value = np.array([1.0 if nxt == "true" else 0.0])
        else:
            value = np.array([float(nxt)])
        params.items[pname] = (ptype, value)
    return params


def _translate(d):
    m = np.eye(4)
    m[:3, 3] = d
    return m


def _scale(s):
    m = np.eye(4)
    m[0, 0], m[1, 1], m[2, 2] = s
    return m


def _rotate(angle_deg, axis):
    a = np.asarray(axis, dtype=np.float64)
    a = a / np.linalg.norm(a)
    s, c = math.sin(math.radians(angle_deg)), math.cos(math.radians(angle_deg))
    x, y, z = a
    r = np.array([
        [c + x * x * (1 - c), x * y * (1 - c) - z * s, x * z * (1 - c) + y * s],
        [y * x * (1 - c) + z * s, c + y * y * (1 - c), y * z * (1 - c) - x * s],
        [z * x * (1 - c) - y * s, z * y * (1 - c) + x * s, c + z * z * (1 - c)],
    ])
    m = np.eye(4)
    m[:3, :3] = r
    return m


def _transform_points(ctm: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return pts @ ctm[:3, :3].T + ctm[:3, 3]


class _ParserState:
    def __init__(self):
        self.scene = SceneDesc()
        self.ctm = np.eye(4)
        self.attr_stack: list[tuple] = []        # (ctm, material_ref, area_light)
        self.xform_stack: list[np.ndarray] = []
        self.material_ref = -1
        self.area_light: np.ndarray | None = None  # pending radiance
        self.named_materials: dict[str, int] = {}
        self.named_objects: dict[str, int] = {}
        self.texture_names: dict[str, int] = {}
        self.current_object: NamedObject | None = None
        self.object_base_ctm: np.ndarray | None = None
        self.in_world = False


def parse_pbrt(source, base_path: str | None = None) -> SceneDesc:
    """Parse a PBRT-subset scene from a text stream, string, or file path."""
    text = source.read() if hasattr(source, "read") else source
    st = _ParserState()
    _parse_stream(_Scanner(text), st, base_path or ".", depth=0)
    if st.attr_stack or st.xform_stack:
        raise UnbalancedBlock(0, "Attribute/Transform block left open")
    if st.current_object is not None:
        raise UnbalancedBlock(0, "ObjectBegin left open")
    _default_material(st)
    return st.scene


def parse_pbrt_file(path: str) -> SceneDesc:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return parse_pbrt(text, base_path=os.path.dirname(os.path.abspath(path)))


def _default_material(st: _ParserState):
    if not st.scene.materials:
        st.scene.materials.append(DisneyMaterial())
    for obj in st.scene.objects:
        for shape in obj.shapes:
            if shape.material_ref < 0:
                shape.material_ref = 0


def _parse_stream(sc: _Scanner, st: _ParserState, base_path: str, depth: int):
    while True:
        tok = sc.next()
        if tok is None:
            return
        if tok.startswith('"'):
            raise PbrtSyntaxError(sc.line(), "directive")
        if tok not in SUPPORTED_DIRECTIVES:
            raise UnsupportedDirective(tok, sc.line())
        _DISPATCH[tok](sc, st, base_path, depth)


def _quoted(sc: _Scanner, what: str) -> str:
    tok = sc.next()
    if tok is None or not tok.startswith('"'):
        raise PbrtSyntaxError(sc.line(), what)
    return tok[1:-1]


def _fixed_floats(sc: _Scanner, n: int, what: str) -> np.ndarray:
    vals = []
    while len(vals) < n:
        tok = sc.next()
        if tok == "[":
            vals.extend(_numbers_from_text(sc.bracket_slice()).tolist())
        elif tok is None:
            raise PbrtSyntaxError(sc.line(), what)
        else:
            vals.append(float(tok))
    if len(vals) != n:
        raise PbrtSyntaxError(sc.line(), what)
    return np.array(vals, dtype=np.float64)


def _d_include(sc, st, base_path, depth):
    if depth + 1 > MAX_INCLUDE_DEPTH:
        raise UnbalancedBlock(sc.line(), f"Include nesting beyond {MAX_INCLUDE_DEPTH}")
    rel = _quoted(sc, "include path")
    path = rel if os.path.isabs(rel) else os.path.join(base_path, rel)
    if not os.path.exists(path):
        raise MissingInclude(path)
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    _parse_stream(_Scanner(text, name=path), st, os.path.dirname(path), depth + 1)


def _d_attribute_begin(sc, st, *_):
    st.attr_stack.append((st.ctm.copy(), st.material_ref, st.area_light))


def _d_attribute_end(sc, st, *_):
    if not st.attr_stack:
        raise UnbalancedBlock(sc.line(), "AttributeEnd")
    st.ctm, st.material_ref, st.area_light = st.attr_stack.pop()


def _d_transform_begin(sc, st, *_):
    st.xform_stack.append(st.ctm.copy())


def _d_transform_end(sc, st, *_):
    if not st.xform_stack:
        raise UnbalancedBlock(sc.line(), "TransformEnd")
    st.ctm = st.xform_stack.pop()


def _d_world_begin(sc, st, *_):
    st.in_world = True
    st.ctm = np.eye(4)


def _d_world_end(sc, st, *_):
    st.in_world = False


def _d_translate(sc, st, *_):
    st.ctm = st.ctm @ _translate(_fixed_floats(sc, 3, "Translate x y z"))


def _d_scale(sc, st, *_):
    st.ctm = st.ctm @ _scale(_fixed_floats(sc, 3, "Scale x y z"))


def _d_rotate(sc, st, *_):
    v = _fixed_floats(sc, 4, "Rotate angle x y z")
    st.ctm = st.ctm @ _rotate(v[0], v[1:])


def _d_transform(sc, st, *_):
    v = _fixed_floats(sc, 16, "Transform m[16]")
    st.ctm = v.reshape(4, 4).T  # file order is column-major


def _d_concat_transform(sc, st, *_):
    v = _fixed_floats(sc, 16, "ConcatTransform m[16]")
    st.ctm = st.ctm @ v.reshape(4, 4).T


def _d_lookat(sc, st, *_):
    v = _fixed_floats(sc, 9, "LookAt eye look up")
    cam = st.scene.camera
    cam.position = v[0:3].astype(np.float32)
    cam.look_at = v[3:6].astype(np.float32)
    cam.up = v[6:9].astype(np.float32)


def _d_camera(sc, st, *_):
    kind = _quoted(sc, "camera type")
    if kind != "perspective":
        raise UnsupportedDirective(f'Camera "{kind}"', sc.line())
    params = _read_params(sc)
    fov = params.get_float("fov")
    if fov is not None:
        st.scene.camera.fov_y = float(np.float32(fov))


def _d_film(sc, st, *_):
    _quoted(sc, "film type")
    params = _read_params(sc)
    cam = st.scene.camera
    xres = params.get_ints("xresolution")
    yres = params.get_ints("yresolution")
    if xres is not None:
        cam.width = int(xres[0])
    if yres is not None:
        cam.height = int(yres[0])
    cam.aspect = float(np.float32(cam.width / cam.height))


def _disney_from_params(st: _ParserState, params: _Params) -> DisneyMaterial:
    mat = DisneyMaterial()
    tex = params.get_texture("basecolor") or params.get_texture("color")
    if tex is not None:
        if tex not in st.texture_names:
            raise PbrtSyntaxError(0, f"texture '{tex}' declared before use")
        mat.texture_ref = st.texture_names[tex]
    else:
        bc = params.get_floats("basecolor")
        if bc is None:
            bc = params.get_floats("color")
        if bc is not None:
            mat.base_color = bc.astype(np.float32)
    for pbrt_name, attr in (("metallic", "metallic"), ("roughness", "roughness"),
                            ("spec", "specular"), ("specular", "specular"),
                            ("spectint", "specular_tint"), ("sheen", "sheen"),
                            ("sheentint", "sheen_tint"), ("clearcoat", "clearcoat"),
                            ("clearcoatgloss", "clearcoat_gloss"),
                            ("ior", "ior"), ("eta", "ior")):
        v = params.get_float(pbrt_name)
        if v is not None:
            setattr(mat, attr, float(np.float32(v)))
    return mat


def _d_material(sc, st, *_):
    kind = _quoted(sc, "material type")
    if kind != "disney":
        raise UnsupportedDirective(f'Material "{kind}"', sc.line())
    params = _read_params(sc)
    st.scene.materials.append(_disney_from_params(st, params))
    st.material_ref = len(st.scene.materials) - 1


def _d_make_named_material(sc, st, *_):
    name = _quoted(sc, "material name")
    params = _read_params(sc)
    if params.get_string("type") != "disney":
        raise UnsupportedDirective(f'MakeNamedMaterial type "{params.get_string("type")}"',
                                   sc.line())
    st.scene.materials.append(_disney_from_params(st, params))
    st.named_materials[name] = len(st.scene.materials) - 1


def _d_named_material(sc, st, *_):
    name = _quoted(sc, "material name")
    if name not in st.named_materials:
        raise PbrtSyntaxError(sc.line(), f"known named material (got '{name}')")
    st.material_ref = st.named_materials[name]


def _d_texture(sc, st, base_path, _depth):
    name = _quoted(sc, "texture name")
    _quoted(sc, "texture data type")  # "color"
    kind = _quoted(sc, "texture class")
    if kind != "facetex":
        raise UnsupportedDirective(f'Texture "{kind}"', sc.line())
    params = _read_params(sc)
    path = params.get_string("filename")
    if path is None:
        raise PbrtSyntaxError(sc.line(), '"string filename"')
    st.scene.textures.append(FaceTextureRef(path=path, channels=3))
    st.texture_names[name] = len(st.scene.textures) - 1


def _d_light_source(sc, st, *_):
    kind = _quoted(sc, "light type")
    if kind != "infinite":
        raise UnsupportedDirective(f'LightSource "{kind}"', sc.line())
    params = _read_params(sc)
    map_path = params.get_string("mapname")
    rgb = params.get_floats("L")
    light = LightDesc(kind=LightKind.ENVIRONMENT,
                      env_constant=(rgb.astype(np.float32) if rgb is not None
                                    else np.ones(3, np.float32)),
                      env_map_path=map_path)
    st.scene.lights.append(light)


def _d_area_light_source(sc, st, *_):
    kind = _quoted(sc, "area light type")
    if kind != "diffuse":
        raise UnsupportedDirective(f'AreaLightSource "{kind}"', sc.line())
    params = _read_params(sc)
    rgb = params.get_floats("L")
    st.area_light = (rgb if rgb is not None else np.ones(3)).astype(np.float32)


def _geometry_from_shape(sc, st, kind: str, params: _Params):
    if kind == "trianglemesh":
        pts = params.get_floats("P")
        idx = params.get_ints("indices")
        if pts is None or idx is None:
            raise PbrtSyntaxError(sc.line(), '"point P" and "integer indices"')
        normals = params.get_floats("N")
        return TriangleMesh(positions=pts.reshape(-1, 3), indices=idx.reshape(-1, 3),
                            normals=None if normals is None else normals.reshape(-1, 3))
    if kind == "quadmesh":
        pts = params.get_floats("P")
        idx = params.get_ints("indices")
        if pts is None or idx is None:
            raise PbrtSyntaxError(sc.line(), '"point P" and "integer indices"')
        return QuadMesh(positions=pts.reshape(-1, 3), indices=idx.reshape(-1, 4))
    if kind == "curve":
        pts = params.get_floats("P")
        if pts is None:
            raise PbrtSyntaxError(sc.line(), '"point P"')
        cps = pts.reshape(-1, 3)
        if len(cps) % 4 != 0:
            raise PbrtSyntaxError(sc.line(), "4 control points per cubic segment")
        segs = cps.reshape(-1, 4, 3)
        style_name = params.get_string("type", "flat")
        if style_name not in ("flat", "round"):
            raise PbrtSyntaxError(sc.line(), 'curve type "flat" or "round"')
        w = params.get_float("width")
        w0 = params.get_float("width0", w if w is not None else 1.0)
        w1 = params.get_float("width1", w if w is not None else 1.0)
        widths = np.linspace(w0, w1, 4)[None, :].repeat(len(segs), axis=0)
        return CurveSet(control_points=segs, widths=widths,
                        style=CurveStyle.FLAT if style_name == "flat" else CurveStyle.ROUND)
    raise UnsupportedDirective(f'Shape "{kind}"', sc.line())


def _bake_transform(geom, ctm):
    if isinstance(geom, (TriangleMesh, QuadMesh)):
        geom.positions = _transform_points(ctm, geom.positions.astype(np.float64)).astype(np.float32)
        if isinstance(geom, TriangleMesh) and geom.normals is not None:
            inv_t = np.linalg.inv(ctm[:3, :3]).T
            n = geom.normals.astype(np.float64) @ inv_t.T
            norm = np.linalg.norm(n, axis=1, keepdims=True)
            geom.normals = (n / np.maximum(norm, 1e-30)).astype(np.float32)
    else:
        cps = geom.control_points.astype(np.float64).reshape(-1, 3)
        geom.control_points = _transform_points(ctm, cps).astype(np.float32).reshape(-1, 4, 3)
    return geom


def _d_shape(sc, st, *_):
    kind = _quoted(sc, "shape type")
    params = _read_params(sc)
    geom = _geometry_from_shape(sc, st, kind, params)
    if st.current_object is not None:
        rel = np.linalg.inv(st.object_base_ctm) @ st.ctm
        shape = ShapeDesc(geometry=_bake_transform(geom, rel),
                          material_ref=st.material_ref)
        st.current_object.shapes.append(shape)
        return
    # Top level: bake the CTM and emit a single-shape object with an
    # identity-transform instance.
    geom = _bake_transform(geom, st.ctm)
    if st.area_light is not None and isinstance(geom, QuadMesh):
        for quad in geom.indices:
            st.scene.lights.append(LightDesc(
                kind=LightKind.QUAD_AREA,
                corners=geom.positions[quad.astype(np.int64)],
                radiance=st.area_light))
    shape = ShapeDesc(geometry=geom, material_ref=st.material_ref)
    name = f"<shape:{len(st.scene.objects)}>"
    st.scene.objects.append(NamedObject(name=name, shapes=[shape]))
    st.scene.instances.append(Instance(object_ref=len(st.scene.objects) - 1,
                                       transform=identity_transform()))


def _d_object_begin(sc, st, *_):
    if st.current_object is not None:
        raise UnbalancedBlock(sc.line(), "nested ObjectBegin")
    name = _quoted(sc, "object name")
    st.current_object = NamedObject(name=name)
    st.object_base_ctm = st.ctm.copy()


def _d_object_end(sc, st, *_):
    if st.current_object is None:
        raise UnbalancedBlock(sc.line(), "ObjectEnd without ObjectBegin")
    st.scene.objects.append(st.current_object)
    st.named_objects[st.current_object.name] = len(st.scene.objects) - 1
    st.current_object = None
    st.object_base_ctm = None


def _d_object_instance(sc, st, *_):
    name = _quoted(sc, "object name")
    if name not in st.named_objects:
        raise PbrtSyntaxError(sc.line(), f"known object name (got '{name}')")
    st.scene.instances.append(Instance(
        object_ref=st.named_objects[name],
        transform=st.ctm[:3, :4].astype(np.float32)))


_DISPATCH = {
    "Include": _d_include,
    "AttributeBegin": _d_attribute_begin,
    "AttributeEnd": _d_attribute_end,
    "TransformBegin": _d_transform_begin,
    "TransformEnd": _d_transform_end,
    "WorldBegin": _d_world_begin,
    "WorldEnd": _d_world_end,
    "Translate": _d_translate,
    "Scale": _d_scale,
    "Rotate": _d_rotate,
    "Transform": _d_transform,
    "ConcatTransform": _d_concat_transform,
    "LookAt": _d_lookat,
    "Camera": _d_camera,
    "Film": _d_film,
    "Material": _d_material,
    "MakeNamedMaterial": _d_make_named_material,
    "NamedMaterial": _d_named_material,
    "Texture": _d_texture,
    "LightSource": _d_light_source,
    "AreaLightSource": _d_area_light_source,
    "Shape": _d_shape,
    "ObjectBegin": _d_object_begin,
    "ObjectEnd": _d_object_end,
    "ObjectInstance": _d_object_instance,
}
