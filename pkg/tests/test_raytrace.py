import numpy as np
import pytest

from conftest import flat_plane_mesh, hilly_mesh, random_soup_mesh, wall_mesh
from terracorr import kernels
from terracorr.accel import build_accelerator, prepare_mesh
from terracorr.kernels import RAY_EPS, _pure
from terracorr.los import HitKind, Ray, ray_box_intersect, ray_triangle_intersect, trace_ray
from terracorr.mesh import BoundingBox, TriangleMesh, compute_bounding_box

TRI_CCW_UP = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
TRI_CCW_DOWN = TRI_CCW_UP[[0, 2, 1]]


def unit_directions(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class TestRayTriangle:
    def test_straight_down_hit_at_unit_distance(self):
        ray = Ray([0.25, 0.25, 1.0], [0.0, 0.0, -1.0])
        assert ray_triangle_intersect(ray, TRI_CCW_UP) == pytest.approx(1.0, abs=1e-12)

    def test_rear_facing_triangle_excluded(self):
        ray = Ray([0.25, 0.25, 1.0], [0.0, 0.0, -1.0])
        assert ray_triangle_intersect(ray, TRI_CCW_DOWN) is None

    def test_miss_outside_barycentric_range(self):
        ray = Ray([2.0, 2.0, 1.0], [0.0, 0.0, -1.0])
        assert ray_triangle_intersect(ray, TRI_CCW_UP) is None

    def test_parallel_ray_misses(self):
        ray = Ray([0.25, 0.25, 1.0], [1.0, 0.0, 0.0])
        assert ray_triangle_intersect(ray, TRI_CCW_UP) is None

    def test_hit_behind_origin_rejected(self):
        ray = Ray([0.25, 0.25, -1.0], [0.0, 0.0, -1.0])
        assert ray_triangle_intersect(ray, TRI_CCW_UP) is None

    def test_edge_grazing_counts_as_hit(self):
        ray = Ray([0.5, 0.0, 1.0], [0.0, 0.0, -1.0])  # on the v0-v1 edge
        assert ray_triangle_intersect(ray, TRI_CCW_UP) == pytest.approx(1.0)

    def test_self_intersection_guard(self):
        ray = Ray([0.25, 0.25, 1e-9], [0.0, 0.0, -1.0])
        assert ray_triangle_intersect(ray, TRI_CCW_UP) is None


class TestRayBox:
    BOX = BoundingBox(0.0, 100.0, 0.0, 100.0, -10.0, 50.0)

    def test_straight_up_hits_ceiling(self):
        kind, t = ray_box_intersect(Ray([50, 50, 10], [0, 0, 1.0]), self.BOX)
        assert (kind, t) == (HitKind.CEILING, 40.0)

    def test_east_hits_wall(self):
        kind, t = ray_box_intersect(Ray([50, 50, 10], [1.0, 0, 0]), self.BOX)
        assert (kind, t) == (HitKind.WALL, 50.0)

    def test_slanted_exit_picks_nearest_face(self):
        kind, t = ray_box_intersect(Ray([50, 50, 10], [0.6, 0, 0.8]), self.BOX)
        assert kind is HitKind.CEILING
        assert t == pytest.approx(50.0, abs=1e-12)

    def test_straight_down_hits_floor(self):
        kind, t = ray_box_intersect(Ray([50, 50, 10], [0, 0, -1.0]), self.BOX)
        assert (kind, t) == (HitKind.FLOOR, 20.0)

    def test_origin_outside_rejected(self):
        with pytest.raises(ValueError, match="inside"):
            ray_box_intersect(Ray([50, 50, 60], [0, 0, -1.0]), self.BOX)

    def test_origin_on_wall_rejected(self):
        with pytest.raises(ValueError, match="inside"):
            ray_box_intersect(Ray([0, 50, 10], [1.0, 0, 0]), self.BOX)


class TestTraceRay:
    def test_flat_plane_straight_down(self, plane):
        box = compute_bounding_box(plane, max_eyepoint_z=69.0, margin=1.0)
        hit = trace_ray(plane, None, box, Ray([50, 50, 2], [0, 0, -1.0]))
        assert hit.kind is HitKind.TERRAIN
        assert hit.length == pytest.approx(2.0, abs=1e-12)
        assert hit.point == pytest.approx([50, 50, 0])

    def test_flat_plane_straight_up(self, plane):
        box = BoundingBox(0, 100, 0, 100, -1.0, 70.0)
        hit = trace_ray(plane, None, box, Ray([50, 50, 2], [0, 0, 1.0]))
        assert hit.kind is HitKind.CEILING
        assert hit.length == pytest.approx(68.0, abs=1e-12)

    def test_45_degree_descent(self, plane):
        box = compute_bounding_box(plane, max_eyepoint_z=10.0)
        d = np.array([0.0, np.cos(np.radians(-45)), np.sin(np.radians(-45))])
        hit = trace_ray(plane, None, box, Ray([50, 50, 2], d))
        assert hit.kind is HitKind.TERRAIN
        assert hit.length == pytest.approx(2.8284271247461903, abs=1e-9)

    def test_accelerated_path_matches(self, plane):
        box = compute_bounding_box(plane, max_eyepoint_z=10.0)
        index = build_accelerator(plane)
        ray = Ray([50, 50, 2], [0, 0, -1.0])
        fast = trace_ray(plane, index, box, ray)
        slow = trace_ray(plane, None, box, ray)
        assert fast.kind is slow.kind
        assert fast.length == slow.length
        assert (fast.point == slow.point).all()

    def test_reversed_windings_turn_terrain_into_box_hits(self, plane):
        flipped = TriangleMesh(plane.vertices, plane.triangles[:, [0, 2, 1]])
        box = compute_bounding_box(plane, max_eyepoint_z=10.0)
        rng = np.random.default_rng(7)
        for d in unit_directions(rng, 50):
            hit = trace_ray(flipped, None, box, Ray([50, 50, 5], d))
            assert hit.kind is not HitKind.TERRAIN

    def test_enclosure_every_ray_finite(self):
        mesh = hilly_mesh(n=12)
        box = compute_bounding_box(mesh, max_eyepoint_z=30.0)
        index = build_accelerator(mesh)
        rng = np.random.default_rng(3)
        for d in unit_directions(rng, 200):
            hit = trace_ray(mesh, index, box, Ray([50, 50, 20], d))
            assert np.isfinite(hit.length) and hit.length > 0


def brute_reference(impl, mesh, origins, dirs):
    prep = prepare_mesh(mesh)
    out = []
    for o, d in zip(origins, dirs):
        out.append(impl.ray_mesh_brute(o, d, prep.v0, prep.e1, prep.e2, RAY_EPS))
    return out


class TestAcceleratorEquivalence:
    """The BVH must reproduce the exhaustive scan exactly (oracle check)."""

    @pytest.mark.parametrize("mesh_fn,seed", [
        (lambda: flat_plane_mesh(), 1),
        (lambda: hilly_mesh(n=15), 2),
        (lambda: wall_mesh(), 3),
        (lambda: random_soup_mesh(300, seed=11), 4),
        (lambda: TriangleMesh(TRI_CCW_UP * 50.0 + 25.0, [[0, 1, 2]]), 5),
    ])
    def test_bvh_matches_brute_force(self, mesh_fn, seed):
        mesh = mesh_fn()
        index = build_accelerator(mesh)
        prep = index.prepared
        rng = np.random.default_rng(seed)
        n = 500
        origins = rng.uniform([0, 0, -5], [100, 100, 40], (n, 3))
        dirs = unit_directions(rng, n)
        for o, d in zip(origins, dirs):
            bi, bt = kernels.ray_mesh_brute(o, d, prep.v0, prep.e1, prep.e2, RAY_EPS)
            vi, vt = kernels.ray_mesh_bvh(o, d, prep.v0, prep.e1, prep.e2,
                                          *index.bvh_arrays(), RAY_EPS)
            assert (bi >= 0) == (vi >= 0)
            if bi >= 0:
                assert vt == pytest.approx(bt, abs=1e-9)

    def test_two_triangle_mesh_thousand_rays(self, plane):
        index = build_accelerator(plane)
        prep = index.prepared
        rng = np.random.default_rng(42)
        origins = rng.uniform([0, 0, 1], [100, 100, 50], (1000, 3))
        dirs = unit_directions(rng, 1000)
        for o, d in zip(origins, dirs):
            assert kernels.ray_mesh_bvh(o, d, prep.v0, prep.e1, prep.e2, *index.bvh_arrays(), RAY_EPS) \
                == kernels.ray_mesh_brute(o, d, prep.v0, prep.e1, prep.e2, RAY_EPS)

    def test_single_triangle_traversal(self):
        mesh = TriangleMesh(TRI_CCW_UP, [[0, 1, 2]])
        index = build_accelerator(mesh)
        prep = index.prepared
        idx, t = kernels.ray_mesh_bvh([0.25, 0.25, 1.0], [0.0, 0.0, -1.0],
                                      prep.v0, prep.e1, prep.e2, *index.bvh_arrays(), RAY_EPS)
        assert idx == 0
        assert t == pytest.approx(1.0)

    def test_grazing_rays_on_ridge(self):
        mesh = wall_mesh()
        index = build_accelerator(mesh)
        prep = index.prepared
        # skim along the wall top and the plane surface
        for o, d in [([50, 0.5, 10.0], [0.0, 1.0, 0.0]),
                     ([50, 0.5, 9.999999], [0.0, 1.0, 0.0]),
                     ([0.5, 50.0, 1e-5], [1.0, 0.0, 0.0])]:
            o = np.asarray(o, dtype=float)
            d = np.asarray(d, dtype=float)
            assert kernels.ray_mesh_bvh(o, d, prep.v0, prep.e1, prep.e2, *index.bvh_arrays(), RAY_EPS) \
                == kernels.ray_mesh_brute(o, d, prep.v0, prep.e1, prep.e2, RAY_EPS)


@pytest.mark.skipif(kernels.IMPLEMENTATION != "native", reason="compiled kernel not built")
class TestPureNativeParity:
    """The numpy fallback and the compiled core must agree on every ray."""

    def test_brute_force_parity(self):
        native = kernels.implementations()["native"]
        mesh = hilly_mesh(n=10)
        prep = prepare_mesh(mesh)
        rng = np.random.default_rng(9)
        origins = rng.uniform([0, 0, -5], [100, 100, 30], (300, 3))
        dirs = unit_directions(rng, 300)
        for o, d in zip(origins, dirs):
            pi, pt = _pure.ray_mesh_brute(o, d, prep.v0, prep.e1, prep.e2, RAY_EPS)
            ni, nt = native.ray_mesh_brute(o, d, prep.v0, prep.e1, prep.e2, RAY_EPS)
            assert pi == ni
            if pi >= 0:
                assert nt == pytest.approx(pt, abs=1e-9)

    def test_box_exit_parity(self):
        native = kernels.implementations()["native"]
        lo = np.array([0.0, 0.0, -10.0])
        hi = np.array([100.0, 100.0, 50.0])
        rng = np.random.default_rng(10)
        origins = rng.uniform(lo + 1e-6, hi - 1e-6, (200, 3))
        dirs = unit_directions(rng, 200)
        axis_dirs = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1.0]])
        for o, d in zip(np.vstack([origins, origins[:6]]), np.vstack([dirs, axis_dirs])):
            assert _pure.ray_box_exit(o, d, lo, hi) == native.ray_box_exit(o, d, lo, hi)

    def test_trace_batch_parity(self):
        native = kernels.implementations()["native"]
        mesh = hilly_mesh(n=10)
        index = build_accelerator(mesh)
        prep = index.prepared
        box = compute_bounding_box(mesh, max_eyepoint_z=30.0)
        lo, hi = box.bounds()
        rng = np.random.default_rng(11)
        n = 400
        origins = np.ascontiguousarray(rng.uniform(lo + 0.01, hi - 0.01, (n, 3)))
        dirs = np.ascontiguousarray(unit_directions(rng, n))
        results = {}
        for name, impl in (("pure", _pure), ("native", native)):
            kinds = np.empty(n, dtype=np.int8)
            ts = np.empty(n, dtype=np.float64)
            impl.trace_batch(origins, dirs, prep.v0, prep.e1, prep.e2,
                             index.bvh_arrays(), lo, hi, RAY_EPS, kinds, ts)
            results[name] = (kinds, ts)
        assert (results["pure"][0] == results["native"][0]).all()
        assert np.allclose(results["pure"][1], results["native"][1], atol=1e-9)
