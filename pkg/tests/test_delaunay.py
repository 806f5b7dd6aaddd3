import itertools
import math

import numpy as np
import pytest

from sonoviz.errors import (
    AllCollinearError,
    CollinearTriangleError,
    TooFewPointsError,
    VolumeTooSmallError,
)
from sonoviz.delaunay import (
    CircleSide,
    Point2,
    Triangulation2D,
    extract_slice_points,
    in_circumcircle,
    prune_edges,
    stack_slices,
    triangulate_2d,
)
from sonoviz.volume import Axis, ScalarVolume, Slice2D, extract_slice, synth_sphere


def edge_set(triangles):
    out = set()
    for i, j, k in np.asarray(triangles):
        for a, b in ((i, j), (j, k), (i, k)):
            out.add((min(int(a), int(b)), max(int(a), int(b))))
    return out


def brute_force_delaunay_edges(points):
    """O(n^4) oracle: a triple is Delaunay iff its circumcircle holds no
    other point strictly inside (On points allowed)."""
    n = len(points)
    edges = set()
    for combo in itertools.combinations(range(n), 3):
        i, j, k = combo
        try:
            if all(
                in_circumcircle(points[i], points[j], points[k], points[m])
                is not CircleSide.INSIDE
                for m in range(n)
                if m not in combo
            ):
                edges |= edge_set([combo])
        except CollinearTriangleError:
            continue
    return edges


def triangle_angles(pa, pb, pc):
    out = []
    for a, b, c in ((pa, pb, pc), (pb, pc, pa), (pc, pa, pb)):
        u = np.asarray(b) - np.asarray(a)
        v = np.asarray(c) - np.asarray(a)
        cosang = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
        out.append(math.acos(max(-1.0, min(1.0, float(cosang)))))
    return out


def min_angle(triangulation):
    pts = triangulation.points
    return min(
        min(triangle_angles(pts[i], pts[j], pts[k]))
        for i, j, k in triangulation.triangles
    )


class TestInCircumcircle:
    A, B, C = (0, 0), (1, 0), (0, 1)

    def test_cocircular_point_is_on(self):
        assert in_circumcircle(self.A, self.B, self.C, (1, 1)) is CircleSide.ON

    def test_interior_point_is_inside(self):
        assert in_circumcircle(self.A, self.B, self.C, (0.25, 0.25)) is CircleSide.INSIDE

    def test_far_point_is_outside(self):
        # independent determinant evaluation gives -40 for this input
        assert in_circumcircle(self.A, self.B, self.C, (5, 5)) is CircleSide.OUTSIDE

    def test_collinear_reference_raises(self):
        with pytest.raises(CollinearTriangleError):
            in_circumcircle((0, 0), (1, 1), (2, 2), (0, 1))

    def test_orientation_insensitive(self):
        assert in_circumcircle(self.A, self.C, self.B, (0.25, 0.25)) is CircleSide.INSIDE


class TestTriangulate2D:
    def test_three_points_one_triangle(self):
        t = triangulate_2d([(0, 0), (1, 0), (0, 1)])
        assert len(t.triangles) == 1

    def test_unit_square_two_triangles_insertion_order_tie(self):
        t = triangulate_2d([(0, 0), (1, 0), (1, 1), (0, 1)])
        assert len(t.triangles) == 2
        # the diagonal comes from the first three inserted points
        assert (0, 2) in edge_set(t.triangles)

    def test_matches_brute_force_oracle_on_seeded_sets(self):
        for seed in range(25):
            rng = np.random.default_rng(1000 + seed)
            pts = rng.random((12, 2)) * 100
            t = triangulate_2d(pts)
            assert edge_set(t.triangles) == brute_force_delaunay_edges(pts), f"seed {seed}"

    def test_no_point_strictly_inside_any_circumcircle(self):
        rng = np.random.default_rng(7)
        pts = rng.random((60, 2)) * 10
        t = triangulate_2d(pts)
        for i, j, k in t.triangles:
            for m in range(len(t.points)):
                if m in (int(i), int(j), int(k)):
                    continue
                assert (
                    in_circumcircle(t.points[i], t.points[j], t.points[k], t.points[m])
                    is not CircleSide.INSIDE
                )

    def test_all_triangles_ccw_positive_area(self):
        rng = np.random.default_rng(8)
        t = triangulate_2d(rng.random((80, 2)))
        p = t.points
        for i, j, k in t.triangles:
            area2 = (p[j][0] - p[i][0]) * (p[k][1] - p[i][1]) - (p[j][1] - p[i][1]) * (
                p[k][0] - p[i][0]
            )
            assert area2 > 0

    def test_covers_convex_hull_area(self):
        rng = np.random.default_rng(9)
        pts = rng.random((100, 2)) * 20
        t = triangulate_2d(pts)
        p = t.points
        total = 0.0
        for i, j, k in t.triangles:
            total += (
                (p[j][0] - p[i][0]) * (p[k][1] - p[i][1])
                - (p[j][1] - p[i][1]) * (p[k][0] - p[i][0])
            ) / 2
        hull = _hull_area(pts)
        assert abs(total - hull) / hull < 1e-6

    def test_insertion_order_invariance_generic_points(self):
        rng = np.random.default_rng(10)
        pts = rng.random((20, 2)) * 5
        base = triangulate_2d(pts)
        perm = rng.permutation(20)
        shuffled = triangulate_2d(pts[perm])
        remapped = {
            (min(perm[a], perm[b]), max(perm[a], perm[b]))
            for a, b in edge_set(shuffled.triangles)
        }
        assert edge_set(base.triangles) == remapped

    def test_flip_never_improves_min_angle(self):
        improvements = 0
        for seed in range(50):
            rng = np.random.default_rng(3000 + seed)
            pts = rng.random((10, 2)) * 10
            t = triangulate_2d(pts)
            flipped = _random_flip(t, rng)
            if flipped is None:
                continue
            if min_angle(flipped) > min_angle(t) + 1e-12:
                improvements += 1
        assert improvements == 0

    def test_duplicates_deduplicated(self):
        t = triangulate_2d([(0, 0), (0, 0), (1, 0), (1, 0), (0, 1)])
        assert len(t.points) == 3

    def test_too_few_points(self):
        with pytest.raises(TooFewPointsError):
            triangulate_2d([(0, 0), (1, 1)])
        with pytest.raises(TooFewPointsError):
            triangulate_2d([(0, 0), (0, 0), (0, 0), (1, 1)])

    def test_all_collinear(self):
        with pytest.raises(AllCollinearError):
            triangulate_2d([(0, 0), (1, 1), (2, 2), (3, 3)])

    def test_grid_points_with_many_cocircular_ties(self):
        rng = np.random.default_rng(4)
        pts = rng.integers(0, 6, size=(25, 2)).astype(float)
        t = triangulate_2d(pts)
        p = t.points
        for i, j, k in t.triangles:
            area2 = (p[j][0] - p[i][0]) * (p[k][1] - p[i][1]) - (p[j][1] - p[i][1]) * (
                p[k][0] - p[i][0]
            )
            assert area2 > 0

    def test_collinear_hull_run(self):
        pts = [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (2, 3), (5, 0), (6, 0), (3, -2)]
        t = triangulate_2d(pts)
        p = t.points
        total = sum(
            (
                (p[j][0] - p[i][0]) * (p[k][1] - p[i][1])
                - (p[j][1] - p[i][1]) * (p[k][0] - p[i][0])
            )
            / 2
            for i, j, k in t.triangles
        )
        assert total == pytest.approx(0.5 * 6 * 3 + 0.5 * 6 * 2)


def _hull_area(points):
    pts = sorted(map(tuple, np.asarray(points, dtype=float)))

    def half(ps):
        out = []
        for p in ps:
            while len(out) >= 2 and (out[-1][0] - out[-2][0]) * (p[1] - out[-2][1]) - (
                out[-1][1] - out[-2][1]
            ) * (p[0] - out[-2][0]) <= 0:
                out.pop()
            out.append(p)
        return out

    lower, upper = half(pts), half(pts[::-1])
    poly = lower[:-1] + upper[:-1]
    s = 0.0
    for (x1, y1), (x2, y2) in zip(poly, poly[1:] + poly[:1]):
        s += x1 * y2 - x2 * y1
    return abs(s) / 2


def _random_flip(triangulation, rng):
    """Flip one random interior edge of a convex quad; None if no candidate."""
    tri = [tuple(map(int, r)) for r in triangulation.triangles]
    pts = triangulation.points
    by_edge = {}
    for idx, (i, j, k) in enumerate(tri):
        for a, b in ((i, j), (j, k), (k, i)):
            by_edge.setdefault((min(a, b), max(a, b)), []).append(idx)
    interior = [e for e, ts in by_edge.items() if len(ts) == 2]
    rng.shuffle(interior)
    for a, b in interior:
        t1, t2 = by_edge[(a, b)]
        c = next(v for v in tri[t1] if v not in (a, b))
        d = next(v for v in tri[t2] if v not in (a, b))

        def area2(i, j, k):
            return (pts[j][0] - pts[i][0]) * (pts[k][1] - pts[i][1]) - (
                pts[j][1] - pts[i][1]
            ) * (pts[k][0] - pts[i][0])

        # the flip is valid only if the quad a-c-b-d is strictly convex
        if area2(c, d, a) == 0 or area2(c, d, b) == 0:
            continue
        if (area2(c, d, a) > 0) == (area2(c, d, b) > 0):
            continue
        new = [t for n, t in enumerate(tri) if n not in (t1, t2)]
        new += [(c, d, a), (c, d, b)]
        return Triangulation2D(pts, np.array([list(t) for t in new], dtype=np.int32))
    return None


class TestPruneEdges:
    def test_huge_max_edge_keeps_everything(self):
        t = triangulate_2d([(0, 0), (1, 0), (1, 1), (0, 1)])
        out = prune_edges(t, 1e9)
        assert np.array_equal(out.triangles, t.triangles)

    def test_tiny_max_edge_removes_everything(self):
        t = triangulate_2d([(0, 0), (1, 0), (1, 1), (0, 1)])
        out = prune_edges(t, 0.5)
        assert len(out.triangles) == 0
        assert len(out.points) == len(t.points)

    def test_outlier_triangles_removed(self):
        t = triangulate_2d([(0, 0), (1, 0), (1, 1), (0, 1), (100, 100)])
        out = prune_edges(t, 2.0)
        assert len(out.triangles) == 2
        assert 4 not in set(out.triangles.reshape(-1).tolist())

    def test_rejects_nonpositive_max_edge(self):
        t = triangulate_2d([(0, 0), (1, 0), (0, 1)])
        with pytest.raises(ValueError):
            prune_edges(t, 0.0)


class TestExtractSlicePoints:
    def test_constant_slice_no_points(self):
        sl = Slice2D(np.zeros((4, 4), dtype=np.float32), (1.0, 1.0), Axis.Z, 0)
        assert extract_slice_points(sl, 0.5) == []

    def test_single_hot_pixel_diamond(self):
        data = np.zeros((3, 3), dtype=np.float32)
        data[1, 1] = 1.0
        sl = Slice2D(data, (1.0, 1.0), Axis.Z, 0)
        pts = extract_slice_points(sl, 0.5, step=1)
        assert sorted((round(p.x, 6), round(p.y, 6)) for p in pts) == [
            (0.5, 1.0),
            (1.0, 0.5),
            (1.0, 1.5),
            (1.5, 1.0),
        ]

    def test_spacing_scales_to_mm(self):
        data = np.zeros((3, 3), dtype=np.float32)
        data[1, 1] = 1.0
        sl = Slice2D(data, (2.0, 0.5), Axis.Z, 0)
        pts = extract_slice_points(sl, 0.5, step=1)
        assert sorted((round(p.x, 6), round(p.y, 6)) for p in pts) == [
            (1.0, 0.5),
            (2.0, 0.25),
            (2.0, 0.75),
            (3.0, 0.5),
        ]

    def test_step_thins_per_chain(self):
        data = np.zeros((3, 3), dtype=np.float32)
        data[1, 1] = 1.0
        sl = Slice2D(data, (1.0, 1.0), Axis.Z, 0)
        assert len(extract_slice_points(sl, 0.5, step=2)) == 2

    def test_sphere_equator_ring_distance(self):
        ball = synth_sphere((64, 64, 64), (31.5, 31.5, 31.5), 20.0)
        sl = extract_slice(ball, Axis.Z, 31)
        pts = extract_slice_points(sl, 0.5, step=1)
        assert len(pts) > 50
        ring_radius = math.sqrt(20.0**2 - 0.5**2)
        for p in pts:
            assert abs(math.hypot(p.x - 31.5, p.y - 31.5) - ring_radius) < 1.0

    def test_deterministic(self):
        rng = np.random.default_rng(12)
        data = rng.random((16, 16)).astype(np.float32)
        sl = Slice2D(data, (1.0, 1.0), Axis.Z, 0)
        a = extract_slice_points(sl, 0.5, step=1)
        b = extract_slice_points(sl, 0.5, step=1)
        assert a == b


class TestStackSlices:
    def test_constant_volume_empty_mesh(self):
        vol = ScalarVolume(np.zeros((8, 8, 8), dtype=np.float32))
        mesh = stack_slices(vol, 0.5, Axis.Z)
        assert mesh.vertex_count == 0 and mesh.triangle_count == 0

    def test_sphere_vertices_near_surface(self):
        ball = synth_sphere((64, 64, 64), (31.5, 31.5, 31.5), 20.0)
        mesh = stack_slices(ball, 0.5, Axis.Z, slice_step=4, point_step=1, max_edge=4.0)
        assert mesh.triangle_count > 0
        d = np.linalg.norm(mesh.positions - np.array([31.5, 31.5, 31.5], dtype=np.float32), axis=1)
        assert np.all(np.abs(d - 20.0) <= 1.5)

    def test_z_extent_stays_within_sphere(self):
        ball = synth_sphere((64, 64, 64), (31.5, 31.5, 31.5), 20.0)
        mesh = stack_slices(ball, 0.5, Axis.Z, slice_step=4, max_edge=4.0)
        z = mesh.positions[:, 2]
        assert z.min() >= 31.5 - 20.0 - 4.0  # one slice_step of slack
        assert z.max() <= 31.5 + 20.0 + 4.0

    def test_vertices_inside_volume_bbox(self):
        ball = synth_sphere((32, 32, 32), (15.5, 15.5, 15.5), 10.0)
        mesh = stack_slices(ball, 0.5, Axis.Y, slice_step=2, max_edge=4.0)
        assert mesh.positions.min() >= 0.0
        assert mesh.positions.max() <= 31.0

    def test_axis_choices(self):
        ball = synth_sphere((24, 24, 24), (11.5, 11.5, 11.5), 8.0)
        for axis in (Axis.X, Axis.Y, Axis.Z):
            mesh = stack_slices(ball, 0.5, axis, slice_step=3, max_edge=4.0)
            assert mesh.triangle_count > 0

    def test_parallel_matches_sequential(self):
        ball = synth_sphere((32, 32, 32), (15.5, 15.5, 15.5), 10.0)
        seq = stack_slices(ball, 0.5, Axis.Z, slice_step=2, max_edge=4.0, workers=1)
        par = stack_slices(ball, 0.5, Axis.Z, slice_step=2, max_edge=4.0, workers=4)
        assert np.array_equal(seq.positions, par.positions)
        assert np.array_equal(seq.triangles, par.triangles)
        assert np.array_equal(seq.normals, par.normals)

    def test_normals_unit_length(self):
        ball = synth_sphere((32, 32, 32), (15.5, 15.5, 15.5), 10.0)
        mesh = stack_slices(ball, 0.5, Axis.Z, slice_step=2, max_edge=4.0)
        lengths = np.linalg.norm(mesh.normals.astype(np.float64), axis=1)
        assert np.all(np.abs(lengths - 1.0) < 1e-4)

    def test_volume_too_small(self):
        vol = ScalarVolume(np.zeros((1, 8, 8), dtype=np.float32))
        with pytest.raises(VolumeTooSmallError):
            stack_slices(vol, 0.5, Axis.Z)

    def test_spacing_respected(self):
        ball = synth_sphere((32, 32, 32), (15.5, 15.5, 15.5), 10.0)
        scaled = ScalarVolume(ball.data, spacing=(1.0, 1.0, 2.0), origin=(0, 0, 5))
        mesh = stack_slices(scaled, 0.5, Axis.Z, slice_step=2, max_edge=4.0)
        z = mesh.positions[:, 2]
        # slice k lands at world z = 5 + 2k
        assert np.all((z - 5.0) % 2.0 == 0)
