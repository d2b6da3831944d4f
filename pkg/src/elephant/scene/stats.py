"""Scene statistics by full traversal; instanced counts by per-instance summation."""
from __future__ import annotations

from dataclasses import dataclass, field

from .model import CurveSet, QuadMesh, SceneDesc, TriangleMesh


@dataclass
class StatsReport:
    unique_objects: int = 0
    unique_shapes: int = 0
    unique_triangles: int = 0
    unique_quads: int = 0
    unique_curve_segments: int = 0
    instance_count: int = 0
    instanced_triangles: int = 0
    instanced_quads: int = 0
    per_object_primitive_histogram: dict[str, int] = field(default_factory=dict)

    def as_text(self) -> str:
        rows = [
            ("unique objects", self.unique_objects),
            ("unique shapes", self.unique_shapes),
            ("unique triangles", self.unique_triangles),
            ("unique quads", self.unique_quads),
            ("unique curve segments", self.unique_curve_segments),
            ("instances", self.instance_count),
            ("instanced triangles", self.instanced_triangles),
            ("instanced quads", self.instanced_quads),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value:>12}" for name, value in rows)

    def as_keyvalues(self) -> str:
        return "\n".join([
            f"unique_objects={self.unique_objects}",
            f"unique_shapes={self.unique_shapes}",
            f"unique_triangles={self.unique_triangles}",
            f"unique_quads={self.unique_quads}",
            f"unique_curve_segments={self.unique_curve_segments}",
            f"instance_count={self.instance_count}",
            f"instanced_triangles={self.instanced_triangles}",
            f"instanced_quads={self.instanced_quads}",
        ])


def scene_stats(scene: SceneDesc) -> StatsReport:
    report = StatsReport()
    report.unique_objects = len(scene.objects)
    report.instance_count = len(scene.instances)
    tris_per_object = []
    quads_per_object = []
    for obj in scene.objects:
        tris = quads = curves = 0
        for shape in obj.shapes:
            g = shape.geometry
            if isinstance(g, TriangleMesh):
                tris += g.primitive_count
            elif isinstance(g, QuadMesh):
                quads += g.primitive_count
            elif isinstance(g, CurveSet):
                curves += g.primitive_count
        report.unique_shapes += len(obj.shapes)
        report.unique_triangles += tris
        report.unique_quads += quads
        report.unique_curve_segments += curves
        report.per_object_primitive_histogram[obj.name] = tris + quads + curves
        tris_per_object.append(tris)
        quads_per_object.append(quads)
    for inst in scene.instances:
        report.instanced_triangles += tris_per_object[inst.object_ref]
        report.instanced_quads += quads_per_object[inst.object_ref]
    return report
