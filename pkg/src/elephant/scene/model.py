"""In-memory scene model: meshes, curves, instances, materials, lights, camera.

All geometry arrays are float32/uint32 so the binary sidecar format can store
them verbatim. Everything is treated as immutable after construction and is
safe to share across threads.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields

import numpy as np


class ShapeKind(enum.IntEnum):
    TRIANGLE_MESH = 0
    QUAD_MESH = 1
    CURVE_SET = 2


class CurveStyle(enum.IntEnum):
    FLAT = 0
    ROUND = 1


class LightKind(enum.IntEnum):
    QUAD_AREA = 0
    ENVIRONMENT = 1


def _as_f32(a, shape_tail) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float32)
    if shape_tail and (out.ndim < 2 or out.shape[-1] != shape_tail):
        out = out.reshape(-1, shape_tail)
    return out


def _as_u32(a, shape_tail) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.uint32)
    if shape_tail and (out.ndim < 2 or out.shape[-1] != shape_tail):
        out = out.reshape(-1, shape_tail)
    return out


def arrays_equal(a: np.ndarray | None, b: np.ndarray | None) -> bool:
    """Bit-exact array comparison (NaN-safe: compares the raw bytes)."""
    if a is None or b is None:
        return a is None and b is None
    return a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()


@dataclass
class TriangleMesh:
    positions: np.ndarray  # (n, 3) float32
    indices: np.ndarray    # (m, 3) uint32
    normals: np.ndarray | None = None  # (n, 3) float32, optional

    def __post_init__(self):
        self.positions = _as_f32(self.positions, 3)
        self.indices = _as_u32(self.indices, 3)
        if self.normals is not None:
            self.normals = _as_f32(self.normals, 3)

    @property
    def primitive_count(self) -> int:
        return len(self.indices)

    def validate(self):
        if self.indices.size and self.indices.max() >= len(self.positions):
            raise ValueError("triangle index out of range")
        if np.isnan(self.positions).any():
            raise ValueError("NaN vertex position")

    def __eq__(self, other):
        return (isinstance(other, TriangleMesh)
                and arrays_equal(self.positions, other.positions)
                and arrays_equal(self.indices, other.indices)
                and arrays_equal(self.normals, other.normals))


@dataclass
class QuadMesh:
    positions: np.ndarray  # (n, 3) float32
    indices: np.ndarray    # (m, 4) uint32

    def __post_init__(self):
        self.positions = _as_f32(self.positions, 3)
        self.indices = _as_u32(self.indices, 4)

    @property
    def primitive_count(self) -> int:
        return len(self.indices)

    def validate(self):
        if self.indices.size and self.indices.max() >= len(self.positions):
            raise ValueError("quad index out of range")

    def __eq__(self, other):
        return (isinstance(other, QuadMesh)
                and arrays_equal(self.positions, other.positions)
                and arrays_equal(self.indices, other.indices))


@dataclass
class CurveSet:
    control_points: np.ndarray  # (s, 4, 3) float32, cubic Bezier spans
    widths: np.ndarray          # (s, 4) float32, per control point
    style: CurveStyle = CurveStyle.FLAT

    def __post_init__(self):
        self.control_points = np.ascontiguousarray(
            self.control_points, dtype=np.float32).reshape(-1, 4, 3)
        self.widths = np.ascontiguousarray(
            self.widths, dtype=np.float32).reshape(-1, 4)
        self.style = CurveStyle(self.style)

    @property
    def primitive_count(self) -> int:
        return len(self.control_points)

    def validate(self):
        if len(self.widths) != len(self.control_points):
            raise ValueError("widths/control point count mismatch")
        if self.widths.size and self.widths.min() <= 0:
            raise ValueError("curve widths must be positive")

    def __eq__(self, other):
        return (isinstance(other, CurveSet)
                and self.style == other.style
                and arrays_equal(self.control_points, other.control_points)
                and arrays_equal(self.widths, other.widths))


Geometry = TriangleMesh | QuadMesh | CurveSet

_KIND_OF = {TriangleMesh: ShapeKind.TRIANGLE_MESH,
            QuadMesh: ShapeKind.QUAD_MESH,
            CurveSet: ShapeKind.CURVE_SET}


@dataclass(eq=True)
class ShapeDesc:
    geometry: Geometry
    material_ref: int = 0

    @property
    def kind(self) -> ShapeKind:
        return _KIND_OF[type(self.geometry)]


@dataclass(eq=True)
class NamedObject:
    name: str
    shapes: list[ShapeDesc] = field(default_factory=list)


@dataclass
class Instance:
    object_ref: int
    transform: np.ndarray  # (3, 4) float32, row-major affine

    def __post_init__(self):
        self.transform = np.ascontiguousarray(
            self.transform, dtype=np.float32).reshape(3, 4)

    def __eq__(self, other):
        return (isinstance(other, Instance)
                and self.object_ref == other.object_ref
                and arrays_equal(self.transform, other.transform))


def identity_transform() -> np.ndarray:
    return np.eye(3, 4, dtype=np.float32)


@dataclass
class DisneyMaterial:
    base_color: np.ndarray = None  # (3,) float32
    metallic: float = 0.0
    roughness: float = 0.5
    specular: float = 0.5
    specular_tint: float = 0.0
    sheen: float = 0.0
    sheen_tint: float = 0.5
    clearcoat: float = 0.0
    clearcoat_gloss: float = 1.0
    ior: float = 1.0
    texture_ref: int = -1  # -1 = untextured

    def __post_init__(self):
        if self.base_color is None:
            self.base_color = np.array([0.8, 0.8, 0.8], dtype=np.float32)
        self.base_color = np.ascontiguousarray(self.base_color, dtype=np.float32).reshape(3)
        # scalars are stored as f32 on disk; snap them now so roundtrips are exact
        for f in fields(self):
            if f.name not in ("base_color", "texture_ref"):
                setattr(self, f.name, float(np.float32(getattr(self, f.name))))

    def validate(self):
        for name in ("metallic", "roughness", "specular", "specular_tint",
                     "sheen", "sheen_tint", "clearcoat", "clearcoat_gloss"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0,1]")
        if self.ior < 1.0:
            raise ValueError("ior must be >= 1")

    def __eq__(self, other):
        if not isinstance(other, DisneyMaterial):
            return NotImplemented
        return (arrays_equal(self.base_color, other.base_color)
                and all(getattr(self, f.name) == getattr(other, f.name)
                        for f in fields(self) if f.name != "base_color"))


@dataclass(eq=True)
class FaceTextureRef:
    path: str
    channels: int = 3


@dataclass
class LightDesc:
    kind: LightKind
    # quad area light
    corners: np.ndarray | None = None   # (4, 3) float32, world space
    radiance: np.ndarray | None = None  # (3,) float32
    # environment
    env_constant: np.ndarray | None = None  # (3,) float32
    env_map_path: str | None = None

    def __post_init__(self):
        self.kind = LightKind(self.kind)
        if self.corners is not None:
            self.corners = _as_f32(self.corners, 3).reshape(4, 3)
        if self.radiance is not None:
            self.radiance = _as_f32(self.radiance, 0).reshape(3)
        if self.env_constant is not None:
            self.env_constant = _as_f32(self.env_constant, 0).reshape(3)

    def __eq__(self, other):
        return (isinstance(other, LightDesc)
                and self.kind == other.kind
                and arrays_equal(self.corners, other.corners)
                and arrays_equal(self.radiance, other.radiance)
                and arrays_equal(self.env_constant, other.env_constant)
                and self.env_map_path == other.env_map_path)


@dataclass
class CameraDesc:
    position: np.ndarray = None
    look_at: np.ndarray = None
    up: np.ndarray = None
    fov_y: float = 60.0  # vertical field of view, degrees
    aspect: float = 1.0
    width: int = 256
    height: int = 256

    def __post_init__(self):
        self.position = _as_f32([0, 0, 0] if self.position is None else self.position, 0).reshape(3)
        self.look_at = _as_f32([0, 0, -1] if self.look_at is None else self.look_at, 0).reshape(3)
        self.up = _as_f32([0, 1, 0] if self.up is None else self.up, 0).reshape(3)
        self.fov_y = float(np.float32(self.fov_y))
        self.aspect = float(np.float32(self.aspect))

    def __eq__(self, other):
        return (isinstance(other, CameraDesc)
                and arrays_equal(self.position, other.position)
                and arrays_equal(self.look_at, other.look_at)
                and arrays_equal(self.up, other.up)
                and self.fov_y == other.fov_y
                and self.aspect == other.aspect
                and self.width == other.width
                and self.height == other.height)


@dataclass(eq=True)
class SceneDesc:
    objects: list[NamedObject] = field(default_factory=list)
    instances: list[Instance] = field(default_factory=list)
    materials: list[DisneyMaterial] = field(default_factory=list)
    textures: list[FaceTextureRef] = field(default_factory=list)
    lights: list[LightDesc] = field(default_factory=list)
    camera: CameraDesc = field(default_factory=CameraDesc)

    def validate(self):
        """Check referential integrity and transform invertibility."""
        for inst in self.instances:
            if not 0 <= inst.object_ref < len(self.objects):
                raise ValueError(f"instance references object {inst.object_ref} "
                                 f"of {len(self.objects)}")
            if abs(np.linalg.det(inst.transform[:, :3].astype(np.float64))) <= 1e-12:
                raise ValueError("instance transform is not invertible")
        for obj in self.objects:
            for shape in obj.shapes:
                if not 0 <= shape.material_ref < max(1, len(self.materials)):
                    raise ValueError(f"shape references material {shape.material_ref}")
                shape.geometry.validate()
        for mat in self.materials:
            mat.validate()
            if mat.texture_ref != -1 and not 0 <= mat.texture_ref < len(self.textures):
                raise ValueError(f"material references texture {mat.texture_ref}")
