"""BIFF: little-endian binary sidecar format for scene descriptions.

Layout: magic "BIFF", u32 version=1, u32 sectionCount, then the section
table {u32 tag, u64 byteOffset, u64 byteLength} with absolute offsets.
Section tags: 1=strings, 2=materials, 3=textures, 4=lights, 5=camera,
6=objects, 7=instances. Geometry arrays are raw f32/u32 with u64
element-count prefixes, read back with bulk buffer reads.
"""
from __future__ import annotations

import io
import struct

import numpy as np

from ..scene.model import (CameraDesc, CurveSet, CurveStyle, DisneyMaterial,
                           FaceTextureRef, Instance, LightDesc, LightKind,
                           NamedObject, QuadMesh, SceneDesc, ShapeDesc,
                           TriangleMesh)
from .errors import BadMagic, TruncatedStream, UnsupportedVersion

MAGIC = b"BIFF"
VERSION = 1

TAG_STRINGS = 1
TAG_MATERIALS = 2
TAG_TEXTURES = 3
TAG_LIGHTS = 4
TAG_CAMERA = 5
TAG_OBJECTS = 6
TAG_INSTANCES = 7

_SECTION_TAGS = (TAG_STRINGS, TAG_MATERIALS, TAG_TEXTURES, TAG_LIGHTS,
                 TAG_CAMERA, TAG_OBJECTS, TAG_INSTANCES)

_MAT_SCALARS = ("metallic", "roughness", "specular", "specular_tint", "sheen",
                "sheen_tint", "clearcoat", "clearcoat_gloss", "ior")


class _Writer:
    def __init__(self):
        self.buf = io.BytesIO()

    def u8(self, v): self.buf.write(struct.pack("<B", v))
    def u16(self, v): self.buf.write(struct.pack("<H", v))
    def u32(self, v): self.buf.write(struct.pack("<I", v))
    def i32(self, v): self.buf.write(struct.pack("<i", v))
    def u64(self, v): self.buf.write(struct.pack("<Q", v))
    def f32(self, v): self.buf.write(struct.pack("<f", v))

    def f32_array(self, arr: np.ndarray):
        arr = np.ascontiguousarray(arr, dtype="<f4")
        self.u64(arr.size)
        self.buf.write(arr.tobytes())

    def u32_array(self, arr: np.ndarray):
        arr = np.ascontiguousarray(arr, dtype="<u4")
        self.u64(arr.size)
        self.buf.write(arr.tobytes())

    def string(self, s: str):
        data = s.encode("utf-8")
        self.u64(len(data))
        self.buf.write(data)

    def bytes(self) -> bytes:
        return self.buf.getvalue()


class _Reader:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedStream(self.pos)
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self): return struct.unpack("<B", self._take(1))[0]
    def u16(self): return struct.unpack("<H", self._take(2))[0]
    def u32(self): return struct.unpack("<I", self._take(4))[0]
    def i32(self): return struct.unpack("<i", self._take(4))[0]
    def u64(self): return struct.unpack("<Q", self._take(8))[0]
    def f32(self): return struct.unpack("<f", self._take(4))[0]

    def f32_array(self, shape_tail: int = 0) -> np.ndarray:
        n = self.u64()
        arr = np.frombuffer(self._take(4 * n), dtype="<f4")
        return arr.reshape(-1, shape_tail) if shape_tail else arr

    def u32_array(self, shape_tail: int = 0) -> np.ndarray:
        n = self.u64()
        arr = np.frombuffer(self._take(4 * n), dtype="<u4")
        return arr.reshape(-1, shape_tail) if shape_tail else arr

    def string(self) -> str:
        n = self.u64()
        return self._take(n).decode("utf-8")


def _intern(strings: list[str], index: dict[str, int], s: str) -> int:
    if s not in index:
        index[s] = len(strings)
        strings.append(s)
    return index[s]


def scene_to_bytes(scene: SceneDesc) -> bytes:
    strings: list[str] = []
    sidx: dict[str, int] = {}
    for obj in scene.objects:
        _intern(strings, sidx, obj.name)
    for tex in scene.textures:
        _intern(strings, sidx, tex.path)
    for light in scene.lights:
        if light.env_map_path:
            _intern(strings, sidx, light.env_map_path)

    sections: dict[int, bytes] = {}

    w = _Writer()
    w.u64(len(strings))
    for s in strings:
        w.string(s)
    sections[TAG_STRINGS] = w.bytes()

    w = _Writer()
    w.u64(len(scene.materials))
    for m in scene.materials:
        for c in m.base_color:
            w.f32(c)
        for name in _MAT_SCALARS:
            w.f32(getattr(m, name))
        w.i32(m.texture_ref)
    sections[TAG_MATERIALS] = w.bytes()

    w = _Writer()
    w.u64(len(scene.textures))
    for tex in scene.textures:
        w.u64(sidx[tex.path])
        w.u32(tex.channels)
    sections[TAG_TEXTURES] = w.bytes()

    w = _Writer()
    w.u64(len(scene.lights))
    for light in scene.lights:
        w.u32(int(light.kind))
        if light.kind == LightKind.QUAD_AREA:
            w.f32_array(light.corners)
            w.f32_array(light.radiance)
        else:
            w.f32_array(light.env_constant if light.env_constant is not None
                        else np.ones(3, np.float32))
            w.u64(sidx[light.env_map_path] if light.env_map_path else 2**64 - 1)
    sections[TAG_LIGHTS] = w.bytes()

    w = _Writer()
    cam = scene.camera
    w.f32_array(cam.position)
    w.f32_array(cam.look_at)
    w.f32_array(cam.up)
    w.f32(cam.fov_y)
    w.f32(cam.aspect)
    w.u32(cam.width)
    w.u32(cam.height)
    sections[TAG_CAMERA] = w.bytes()

    w = _Writer()
    w.u64(len(scene.objects))
    for obj in scene.objects:
        w.u64(sidx[obj.name])
        w.u64(len(obj.shapes))
        for shape in obj.shapes:
            w.u32(int(shape.kind))
            w.i32(shape.material_ref)
            g = shape.geometry
            if isinstance(g, TriangleMesh):
                w.f32_array(g.positions)
                w.u32_array(g.indices)
                w.u32(0 if g.normals is None else 1)
                if g.normals is not None:
                    w.f32_array(g.normals)
            elif isinstance(g, QuadMesh):
                w.f32_array(g.positions)
                w.u32_array(g.indices)
            else:
                w.u32(int(g.style))
                w.f32_array(g.control_points)
                w.f32_array(g.widths)
    sections[TAG_OBJECTS] = w.bytes()

    w = _Writer()
    w.u64(len(scene.instances))
    for inst in scene.instances:
        w.u32(inst.object_ref)
        w.f32_array(inst.transform)
    sections[TAG_INSTANCES] = w.bytes()

    # empty sections are stored with zero length, so an empty scene's file
    # is exactly the header
    if not strings:
        sections[TAG_STRINGS] = b""
    if not scene.materials:
        sections[TAG_MATERIALS] = b""
    if not scene.textures:
        sections[TAG_TEXTURES] = b""
    if not scene.lights:
        sections[TAG_LIGHTS] = b""
    if not scene.objects:
        sections[TAG_OBJECTS] = b""
    if not scene.instances:
        sections[TAG_INSTANCES] = b""
    if scene.camera == CameraDesc():
        sections[TAG_CAMERA] = b""

    header_size = 4 + 4 + 4 + len(_SECTION_TAGS) * (4 + 8 + 8)
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", VERSION))
    out.write(struct.pack("<I", len(_SECTION_TAGS)))
    offset = header_size
    for tag in _SECTION_TAGS:
        out.write(struct.pack("<IQQ", tag, offset, len(sections[tag])))
        offset += len(sections[tag])
    for tag in _SECTION_TAGS:
        out.write(sections[tag])
    return out.getvalue()


def write_biff(scene: SceneDesc, sink) -> int:
    """Serialize a scene to a binary byte stream; returns the byte count."""
    data = scene_to_bytes(scene)
    sink.write(data)
    return len(data)


def write_biff_file(scene: SceneDesc, path: str) -> int:
    with open(path, "wb") as f:
        return write_biff(scene, f)


def scene_from_bytes(data: bytes) -> SceneDesc:
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise UnsupportedVersion(version, VERSION)
    table = {}
    pos = 12
    for _ in range(count):
        tag, off, length = struct.unpack_from("<IQQ", data, pos)
        pos += 20
        if off + length > len(data):
            raise TruncatedStream(off)
        table[tag] = (off, length)

    def reader(tag):
        off, _length = table[tag]
        return _Reader(data, off)

    def empty(tag):
        return table[tag][1] == 0

    r = reader(TAG_STRINGS)
    strings = [] if empty(TAG_STRINGS) else [r.string() for _ in range(r.u64())]

    r = reader(TAG_MATERIALS)
    materials = []
    for _ in range(0 if empty(TAG_MATERIALS) else r.u64()):
        m = DisneyMaterial(base_color=np.array([r.f32() for _ in range(3)], np.float32))
        for name in _MAT_SCALARS:
            setattr(m, name, r.f32())
        m.texture_ref = r.i32()
        materials.append(m)

    r = reader(TAG_TEXTURES)
    textures = [FaceTextureRef(path=strings[r.u64()], channels=r.u32())
                for _ in range(0 if empty(TAG_TEXTURES) else r.u64())]

    r = reader(TAG_LIGHTS)
    lights = []
    for _ in range(0 if empty(TAG_LIGHTS) else r.u64()):
        kind = LightKind(r.u32())
        if kind == LightKind.QUAD_AREA:
            lights.append(LightDesc(kind=kind, corners=r.f32_array(3),
                                    radiance=r.f32_array()))
        else:
            const = r.f32_array()
            path_idx = r.u64()
            lights.append(LightDesc(
                kind=kind, env_constant=const,
                env_map_path=None if path_idx == 2**64 - 1 else strings[path_idx]))

    if empty(TAG_CAMERA):
        camera = CameraDesc()
    else:
        r = reader(TAG_CAMERA)
        camera = CameraDesc(position=r.f32_array(), look_at=r.f32_array(),
                            up=r.f32_array(), fov_y=r.f32(), aspect=r.f32(),
                            width=r.u32(), height=r.u32())

    r = reader(TAG_OBJECTS)
    objects = []
    for _ in range(0 if empty(TAG_OBJECTS) else r.u64()):
        name = strings[r.u64()]
        shapes = []
        for _ in range(r.u64()):
            kind = r.u32()
            material_ref = r.i32()
            if kind == 0:
                positions = r.f32_array(3)
                indices = r.u32_array(3)
                normals = r.f32_array(3) if r.u32() else None
                geom = TriangleMesh(positions=positions, indices=indices, normals=normals)
            elif kind == 1:
                geom = QuadMesh(positions=r.f32_array(3), indices=r.u32_array(4))
            else:
                style = CurveStyle(r.u32())
                cps = r.f32_array().reshape(-1, 4, 3)
                widths = r.f32_array(4)
                geom = CurveSet(control_points=cps, widths=widths, style=style)
            shapes.append(ShapeDesc(geometry=geom, material_ref=material_ref))
        objects.append(NamedObject(name=name, shapes=shapes))

    r = reader(TAG_INSTANCES)
    instances = [Instance(object_ref=r.u32(), transform=r.f32_array(4))
                 for _ in range(0 if empty(TAG_INSTANCES) else r.u64())]

    return SceneDesc(objects=objects, instances=instances, materials=materials,
                     textures=textures, lights=lights, camera=camera)


def read_biff(source) -> SceneDesc:
    """Read a scene from a binary byte stream or bytes object."""
    data = source.read() if hasattr(source, "read") else bytes(source)
    return scene_from_bytes(data)


def read_biff_file(path: str) -> SceneDesc:
    with open(path, "rb") as f:
        return read_biff(f)
