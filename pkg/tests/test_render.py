"""Sampler, framebuffer, tonemap, denoiser, and frame rendering."""
import numpy as np
import pytest

from elephant.render import (TILE_SIZE, DimensionMismatch, FrameBuffer,
                             RenderConfig, RenderMode, RenderStats, denoise,
                             frame_image, read_pfm, render_frame, tile_grid,
                             tonemap_for_display, write_pfm)
from elephant.render import sampler as smp
from elephant.render.context import build_context, camera_rays, emissive_lookup
from elephant.render.pathtrace import _sample_nee
from elephant.scene.generator import PRESETS, generate_challenge_scene
from elephant.scene.model import (DisneyMaterial, Instance, LightDesc,
                                  LightKind, NamedObject, QuadMesh, SceneDesc,
                                  ShapeDesc, TriangleMesh, identity_transform)


class TestSampler:
    def test_deterministic_and_uniform(self):
        px = np.arange(10000) % 100
        py = np.arange(10000) // 100
        a = smp.sample_1d(7, px, py, 3, 5)
        b = smp.sample_1d(7, px, py, 3, 5)
        assert np.array_equal(a, b)
        assert 0.0 <= a.min() and a.max() < 1.0
        assert abs(a.mean() - 0.5) < 0.01

    def test_dimension_decorrelation(self):
        px = np.arange(10000)
        a = smp.sample_1d(7, px, 0, 0, 4)
        b = smp.sample_1d(7, px, 0, 0, 5)
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) < 0.05

    def test_seed_changes_stream(self):
        px = np.arange(100)
        assert not np.array_equal(smp.sample_1d(1, px, 0, 0, 0),
                                  smp.sample_1d(2, px, 0, 0, 0))

    def test_bounce_dims_disjoint(self):
        dims = {smp.bounce_dim(d, w) for d in range(8) for w in range(7)}
        assert len(dims) == 8 * 7
        assert min(dims) > smp.DIM_PIXEL_Y


class TestFrameBuffer:
    def test_tiles_partition_image(self):
        tiles = tile_grid(150, 130)
        cover = np.zeros((130, 150), np.int32)
        for t in tiles:
            cover[t.y0:t.y0 + t.h, t.x0:t.x0 + t.w] += 1
            assert t.w <= TILE_SIZE and t.h <= TILE_SIZE
        assert np.all(cover == 1)
        assert [t.index for t in tiles] == list(range(len(tiles)))

    def test_accumulation_mean(self):
        fb = FrameBuffer(64, 64)
        t = fb.tiles[0]
        one = np.ones((64, 64, 3), np.float32)
        cost = np.ones((64, 64), np.int64)
        fb.add_tile(t, one * 2, one, one, cost, 1)
        fb.add_tile(t, one * 4, one, one, cost, 1)
        assert np.all(fb.mean_color() == 3.0)
        assert np.all(fb.sample_count == 2)
        assert np.all(fb.cost == 2)

    def test_reset(self):
        fb = FrameBuffer(64, 64)
        fb.add_tile(fb.tiles[0], np.ones((64, 64, 3), np.float32),
                    np.ones((64, 64, 3), np.float32),
                    np.ones((64, 64, 3), np.float32),
                    np.ones((64, 64), np.int64), 1)
        fb.reset()
        assert fb.color.sum() == 0 and fb.sample_count.sum() == 0


class TestTonemap:
    def test_unit_radiance_display_value(self):
        out = tonemap_for_display(np.full((1, 1, 3), 1.0))
        # Reinhard(1) = 0.5, sRGB-encoded ≈ 0.7354 → 188/255
        assert out[0, 0, 0] == 188

    def test_monotone(self, rng):
        x = np.sort(rng.uniform(0, 20, 256)).reshape(1, -1, 1).repeat(3, 2)
        y = tonemap_for_display(x).astype(np.int64)[0, :, 0]
        assert np.all(np.diff(y) >= 0)

    def test_pfm_roundtrip(self, rng, tmp_path):
        img = rng.uniform(0, 10, (17, 23, 3)).astype(np.float32)
        p = str(tmp_path / "x.pfm")
        write_pfm(p, img)
        assert np.array_equal(read_pfm(p), img)


class TestDenoise:
    def test_flat_region_fixed_point(self):
        color = np.full((40, 40, 3), 0.37)
        albedo = np.full((40, 40, 3), 0.5)
        normal = np.tile([0.0, 0.0, 1.0], (40, 40, 1))
        out = denoise(color, albedo, normal, 1)
        assert np.max(np.abs(out - color)) <= 1e-6

    def test_reduces_noise(self, rng):
        clean = np.full((64, 64, 3), 0.5)
        noisy = clean + rng.normal(0, 0.2, clean.shape)
        albedo = np.full((64, 64, 3), 0.5)
        normal = np.tile([0.0, 0.0, 1.0], (64, 64, 1))
        out = denoise(noisy, albedo, normal, 1)
        assert np.mean((out - clean) ** 2) < np.mean((noisy - clean) ** 2)

    def test_albedo_edge_preserved(self, rng):
        """Edge position (gradient maximum) stays within one pixel."""
        albedo = np.zeros((64, 64, 3))
        albedo[:, 32:] = 0.9
        color = albedo * 0.8 + rng.normal(0, 0.1, albedo.shape)
        normal = np.tile([0.0, 0.0, 1.0], (64, 64, 1))
        out = denoise(color, albedo, normal, 1)
        grad = np.abs(np.diff(out.mean(axis=(0, 2))))
        assert abs(int(np.argmax(grad)) - 31) <= 1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            denoise(np.zeros((8, 8, 3)), np.zeros((4, 4, 3)),
                    np.zeros((8, 8, 3)), 1)


def plane_and_light_scene(light_half=1.0, height=2.0, radiance=3.0):
    scene = SceneDesc(materials=[
        DisneyMaterial(base_color=np.ones(3, np.float32), roughness=1.0)])
    s = 20.0
    plane = QuadMesh(
        positions=np.array([[-s, 0, s], [s, 0, s], [s, 0, -s], [-s, 0, -s]],
                           np.float32),
        indices=np.array([[0, 1, 2, 3]], np.uint32))
    scene.objects.append(NamedObject(name="floor",
                                     shapes=[ShapeDesc(geometry=plane)]))
    scene.instances.append(Instance(object_ref=0,
                                    transform=identity_transform()))
    a, h = light_half, height
    corners = np.array([[-a, h, -a], [a, h, -a], [a, h, a], [-a, h, a]],
                       np.float32)
    lq = QuadMesh(positions=corners, indices=np.array([[0, 1, 2, 3]], np.uint32))
    scene.objects.append(NamedObject(name="light:panel",
                                     shapes=[ShapeDesc(geometry=lq)]))
    scene.instances.append(Instance(object_ref=1,
                                    transform=identity_transform()))
    scene.lights.append(LightDesc(
        kind=LightKind.QUAD_AREA, corners=corners,
        radiance=np.full(3, radiance, np.float32)))
    scene.camera.position = np.array([0, 1, 6], np.float32)
    scene.camera.look_at = np.zeros(3, np.float32)
    return scene


def rect_irradiance(a, b, h, L):
    """Irradiance at a point on a parallel plane below the rectangle center
    (half extents a, b at height h, radiance L)."""
    A, B = a / h, b / h
    f = (A / np.sqrt(1 + A * A) * np.arctan(B / np.sqrt(1 + A * A))
         + B / np.sqrt(1 + B * B) * np.arctan(A / np.sqrt(1 + B * B)))
    return L * 2.0 * f  # 4 quarter-rectangles x (1/2) from the atan form


class TestLightsThroughNee:
    def test_nee_matches_analytic_rectangle(self, rng):
        scene = plane_and_light_scene(light_half=1.0, height=2.0, radiance=3.0)
        ctx = build_context(scene)
        n = 10_000
        pos = np.tile([0.0, 0.0, 0.0], (n, 1))
        u3 = rng.uniform(size=(n, 3))
        wi, dist, rad, pdf = _sample_nee(ctx, pos, u3)
        ok = pdf > 0
        est = np.zeros(n)
        est[ok] = rad[ok, 0] * np.maximum(wi[ok, 1], 0.0) / pdf[ok]
        expected = rect_irradiance(1.0, 1.0, 2.0, 3.0)
        assert est.mean() == pytest.approx(expected, rel=0.02)

    def test_emissive_lookup_finds_light(self):
        scene = plane_and_light_scene()
        ctx = build_context(scene)
        assert ctx.n_light_strategies == 1
        # instance 1, geom 0, prim 0 is the panel
        got = emissive_lookup(ctx, np.array([1, 0]), np.array([0, 0]),
                              np.array([0, 0]))
        assert got[0] == 0
        assert got[1] == -1


class TestCameraRays:
    def test_center_ray_hits_look_at(self, mini_scene):
        scene, _ = mini_scene
        w, h = scene.camera.width, scene.camera.height
        o, d = camera_rays(scene, np.array([w // 2]), np.array([h // 2]),
                           0.5, 0.5, w, h)
        to_target = scene.camera.look_at - scene.camera.position
        to_target = to_target / np.linalg.norm(to_target)
        assert np.allclose(o[0], scene.camera.position)
        assert np.dot(d[0], to_target) > 0.999

    def test_fov_edges(self, mini_scene):
        scene, _ = mini_scene
        w = h = 100
        o, d = camera_rays(scene, np.array([49.5, 49.5]), np.array([0, h]),
                           0.5, np.array([0.0, 0.0]), w, h)
        half = np.deg2rad(scene.camera.fov_y) / 2
        assert np.arccos(np.clip(d[0] @ d[1], -1, 1)) == pytest.approx(
            2 * half, rel=1e-6)


@pytest.fixture(scope="module")
def ctx(mini_scene):
    return build_context(mini_scene[0])


class TestRenderFrame:
    def cfg(self, **kw):
        kw.setdefault("max_path_depth", 3)
        kw.setdefault("samples_per_frame", 1)
        kw.setdefault("seed", 5)
        return RenderConfig(**kw)

    def render(self, ctx, config, frames=1, threads=1, size=64, tiles=None):
        fb = FrameBuffer(size, size)
        stats = None
        for f in range(frames):
            stats = render_frame(ctx, fb, config, f, threads=threads,
                                 tiles=tiles)
        return fb, stats

    def test_thread_determinism(self, ctx):
        fb1, _ = self.render(ctx, self.cfg(), threads=1, size=96)
        fb8, _ = self.render(ctx, self.cfg(), threads=8, size=96)
        assert np.array_equal(fb1.color, fb8.color)
        assert np.array_equal(fb1.cost, fb8.cost)

    def test_tile_order_independence(self, ctx):
        fb1, _ = self.render(ctx, self.cfg(), size=96)
        fb2 = FrameBuffer(96, 96)
        render_frame(ctx, fb2, self.cfg(), 0, tiles=fb2.tiles[::-1])
        assert np.array_equal(fb1.color, fb2.color)

    def test_frame_splitting_equivalence(self, ctx):
        two_frames, _ = self.render(ctx, self.cfg(samples_per_frame=1),
                                    frames=2)
        one_frame, _ = self.render(ctx, self.cfg(samples_per_frame=2),
                                   frames=1)
        assert np.array_equal(two_frames.color, one_frame.color)
        assert np.array_equal(two_frames.sample_count, one_frame.sample_count)

    def test_stats_closure(self, ctx):
        _, stats = self.render(ctx, self.cfg())
        assert sum(stats.shares.values()) == pytest.approx(1.0, abs=1e-9)
        stats.validate()
        assert stats.rays_traced > 0

    def test_bad_share_rejected(self):
        s = RenderStats(shares={"traversal_intersect": 0.5, "other": 0.49})
        with pytest.raises(ValueError):
            s.validate()

    def test_debug_modes_differ_and_are_deterministic(self, ctx):
        images = {}
        for mode in (RenderMode.PRIM_ID, RenderMode.GEOM_ID,
                     RenderMode.INSTANCE_ID, RenderMode.ALBEDO,
                     RenderMode.NORMAL):
            fb, _ = self.render(ctx, self.cfg(mode=mode), size=48)
            fb2, _ = self.render(ctx, self.cfg(mode=mode), size=48)
            assert np.array_equal(fb.color, fb2.color), mode
            images[mode] = fb.color
        assert not np.array_equal(images[RenderMode.PRIM_ID],
                                  images[RenderMode.INSTANCE_ID])

    def test_cost_heat_image(self, ctx):
        fb, _ = self.render(ctx, self.cfg(mode=RenderMode.COST_HEAT), size=48)
        img = frame_image(fb, RenderMode.COST_HEAT)
        assert img.dtype == np.uint8
        assert img.shape == (48, 48, 3)
        assert img.max() > img.min()  # sky vs geometry cost differs

    def test_max_depth_one_is_direct_only(self, mini_scene):
        ctx = build_context(mini_scene[0])
        direct, s1 = self.render(ctx, self.cfg(max_path_depth=1), size=32)
        full, s3 = self.render(ctx, self.cfg(max_path_depth=3), size=32)
        assert s1.rays_traced < s3.rays_traced
        # indirect light only adds energy
        assert full.color.mean() >= direct.color.mean()

    def test_output_finite(self, ctx):
        fb, stats = self.render(ctx, self.cfg(samples_per_frame=2), size=48)
        assert np.all(np.isfinite(fb.color))
        assert stats.firefly_clamps >= 0
