"""Two-level BVH: construction invariants and oracle equivalence."""
import numpy as np
import pytest

from elephant.accel import TwoLevelAccel
from elephant.accel.bvh import EmptyInput, build_bvh, check_containment
from elephant.scene.generator import PRESETS, generate_challenge_scene
from elephant.scene.model import (DisneyMaterial, Instance, NamedObject,
                                  QuadMesh, SceneDesc, ShapeDesc, TriangleMesh,
                                  identity_transform)


def soup_scene(rng, n_tris=200, n_instances=1, scale=None):
    scene = SceneDesc(materials=[DisneyMaterial()])
    centers = rng.uniform(-5, 5, (n_tris, 1, 3))
    tris = centers + rng.normal(0, 0.4, (n_tris, 3, 3))
    pos = tris.reshape(-1, 3).astype(np.float32)
    idx = np.arange(n_tris * 3, dtype=np.uint32).reshape(-1, 3)
    scene.objects.append(NamedObject(name="soup", shapes=[
        ShapeDesc(geometry=TriangleMesh(positions=pos, indices=idx))]))
    for i in range(n_instances):
        t = identity_transform()
        if i:
            t[:, 3] = rng.uniform(-3, 3, 3)
        if scale is not None:
            t[0, 0], t[1, 1], t[2, 2] = scale
        scene.instances.append(Instance(object_ref=0, transform=t))
    return scene


def random_rays(rng, n, radius=12.0):
    origins = rng.uniform(-radius, radius, (n, 3))
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return origins.astype(np.float32), dirs.astype(np.float32)


def assert_oracle_match(accel, origins, dirs):
    fast = accel.intersect(origins, dirs)
    slow = accel.brute_force_intersect(origins, dirs)
    assert np.array_equal(fast.hit_mask, slow.hit_mask)
    hit = fast.hit_mask
    rel = np.abs(fast.t[hit] - slow.t[hit]) / np.maximum(np.abs(slow.t[hit]), 1e-30)
    assert rel.max(initial=0.0) <= 1e-6
    for name in ("instance_id", "geom_id", "prim_id"):
        assert np.array_equal(getattr(fast, name), getattr(slow, name)), name


class TestBvhBuild:
    def test_containment_and_order(self, rng):
        lo = rng.uniform(-10, 10, (500, 3))
        hi = lo + rng.uniform(0.01, 2.0, (500, 3))
        bvh = build_bvh(lo.astype(np.float32), hi.astype(np.float32))
        check_containment(bvh, lo.astype(np.float32), hi.astype(np.float32))
        assert sorted(bvh.primitive_order.tolist()) == list(range(500))

    def test_leaf_size_cap(self, rng):
        lo = rng.uniform(-5, 5, (300, 3)).astype(np.float32)
        bvh = build_bvh(lo, lo + 0.1)
        leaves = bvh.node_meta[bvh.node_meta[:, 0] < 0]
        assert leaves[:, 1].max() <= 4

    def test_single_primitive(self):
        bvh = build_bvh(np.zeros((1, 3), np.float32), np.ones((1, 3), np.float32))
        assert bvh.node_meta[0, 0] < 0  # root is a leaf

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            build_bvh(np.zeros((0, 3), np.float32), np.zeros((0, 3), np.float32))


class TestOracle:
    def test_triangle_soup(self, rng):
        accel = TwoLevelAccel.from_scene(soup_scene(rng))
        assert_oracle_match(accel, *random_rays(rng, 2000))

    def test_instanced(self, rng):
        accel = TwoLevelAccel.from_scene(soup_scene(rng, n_tris=60,
                                                    n_instances=12))
        assert_oracle_match(accel, *random_rays(rng, 2000))

    def test_nonuniform_scale(self, rng):
        accel = TwoLevelAccel.from_scene(
            soup_scene(rng, n_tris=80, n_instances=4, scale=(2.0, 0.5, 3.0)))
        assert_oracle_match(accel, *random_rays(rng, 2000))

    def test_overlap_preset(self, rng):
        scene, _ = generate_challenge_scene(PRESETS["overlap"], seed=4)
        accel = TwoLevelAccel.from_scene(scene)
        assert_oracle_match(accel, *random_rays(rng, 1500, radius=15.0))

    def test_diagonal_grazing(self, rng):
        """Rays skimming along shared quad diagonals stress the tie rule."""
        scene = SceneDesc(materials=[DisneyMaterial()])
        pos = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], np.float32)
        scene.objects.append(NamedObject(name="q", shapes=[ShapeDesc(
            geometry=QuadMesh(positions=pos,
                              indices=np.array([[0, 1, 2, 3]], np.uint32)))]))
        scene.instances.append(Instance(object_ref=0,
                                        transform=identity_transform()))
        accel = TwoLevelAccel.from_scene(scene)
        t = rng.uniform(0, 1, 800)
        jitter = rng.normal(0, 1e-5, 800)
        targets = np.stack([t + jitter, t - jitter, np.zeros(800)], axis=1)
        origins = np.tile([0.3, 0.3, 5.0], (800, 1)).astype(np.float32)
        dirs = (targets - origins).astype(np.float32)
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        assert_oracle_match(accel, origins, dirs)

    def test_occluded_agrees_with_intersect(self, rng):
        accel = TwoLevelAccel.from_scene(soup_scene(rng, n_tris=100,
                                                    n_instances=3))
        origins, dirs = random_rays(rng, 1500)
        occ = accel.occluded(origins, dirs)
        hit = accel.intersect(origins, dirs).hit_mask
        assert np.array_equal(occ, hit)

    def test_tmax_window(self, rng):
        accel = TwoLevelAccel.from_scene(soup_scene(rng, n_tris=50))
        origins, dirs = random_rays(rng, 500)
        full = accel.intersect(origins, dirs)
        hit = full.hit_mask
        # a tmax just below each hit distance must hide that hit
        short = accel.intersect(origins[hit], dirs[hit],
                                tmax=full.t[hit] * 0.5)
        assert not np.any(short.t >= full.t[hit] * 0.5)


class TestHitGeometry:
    def test_quad_uv_recovery(self):
        scene = SceneDesc(materials=[DisneyMaterial()])
        pos = np.array([[0, 0, 0], [2, 0, 0], [2, 1, 0], [0, 1, 0]], np.float32)
        scene.objects.append(NamedObject(name="q", shapes=[ShapeDesc(
            geometry=QuadMesh(positions=pos,
                              indices=np.array([[0, 1, 2, 3]], np.uint32)))]))
        scene.instances.append(Instance(object_ref=0,
                                        transform=identity_transform()))
        accel = TwoLevelAccel.from_scene(scene)
        uv = np.array([[0.25, 0.5], [0.9, 0.1], [0.5, 0.5], [0.05, 0.95]])
        targets = np.stack([uv[:, 0] * 2, uv[:, 1], np.zeros(4)], axis=1)
        origins = targets + [0, 0, 3]
        dirs = np.tile([0.0, 0.0, -1.0], (4, 1))
        h = accel.intersect(origins.astype(np.float32), dirs.astype(np.float32))
        assert h.hit_mask.all()
        assert np.allclose(h.u, uv[:, 0], atol=1e-5)
        assert np.allclose(h.v, uv[:, 1], atol=1e-5)

    def test_normal_under_nonuniform_scale(self, rng):
        # slanted triangle scaled anisotropically: normals need the
        # inverse-transpose, not the linear part
        scene = SceneDesc(materials=[DisneyMaterial()])
        pos = np.array([[0, 0, 0], [1, 0, 1], [0, 1, 1]], np.float32)
        scene.objects.append(NamedObject(name="t", shapes=[ShapeDesc(
            geometry=TriangleMesh(positions=pos,
                                  indices=np.array([[0, 1, 2]], np.uint32)))]))
        t = identity_transform()
        t[0, 0], t[1, 1], t[2, 2] = 3.0, 1.0, 0.25
        scene.instances.append(Instance(object_ref=0, transform=t))
        accel = TwoLevelAccel.from_scene(scene)
        world = pos * [3.0, 1.0, 0.25]
        expected = np.cross(world[1] - world[0], world[2] - world[0])
        expected /= np.linalg.norm(expected)
        center = world.mean(axis=0)
        origin = (center + expected * 5).astype(np.float32)
        h = accel.intersect(origin[None], (-expected[None]).astype(np.float32))
        assert h.hit_mask[0]
        assert np.allclose(h.normal[0], expected, atol=1e-5)
        assert h.t[0] == pytest.approx(5.0, rel=1e-5)
