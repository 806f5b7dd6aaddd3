"""Per-slice 2D Delaunay triangulation of contour points, stacked into 3D.

The 2D triangulation is incremental Bowyer-Watson: points are inserted in
input order into a super-triangle, triangles whose circumcircle strictly
contains the new point are removed, and the cavity is re-fanned from the
point. Points exactly on a circumcircle (within the predicate tolerance)
do not evict the triangle, so cocircular ties resolve by insertion order.

Slice contour points come from marching squares at the same strict
threshold convention as the 3D extractor. Delaunay fills the convex hull,
which fabricates geometry across concavities; :func:`prune_edges` cuts
triangles with long edges to remove that fill.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    AllCollinearError,
    CollinearTriangleError,
    TooFewPointsError,
    VolumeTooSmallError,
)
from .isosurface import compute_normals
from .mesh import TriangleMesh
from .volume import Axis, ScalarVolume, Slice2D, extract_slice

# |det| at or below INCIRCLE_TOLERANCE * scale^4 counts as "on the circle".
INCIRCLE_TOLERANCE = 1e-10
# duplicate points closer than this (mm) collapse before insertion
DEDUP_TOLERANCE = 1e-9
# super-triangle clearance as a multiple of the bounding-box diagonal
SUPER_TRIANGLE_MARGIN = 10.0


class Point2(NamedTuple):
    x: float
    y: float


class CircleSide(Enum):
    INSIDE = -1
    ON = 0
    OUTSIDE = 1


@dataclass(frozen=True)
class Triangulation2D:
    """Points plus CCW triangle indices satisfying the empty-circumcircle rule."""

    points: np.ndarray  # (n, 2) float64
    triangles: np.ndarray  # (m, 3) int32

    def __post_init__(self) -> None:
        pts = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 2)
        tri = np.ascontiguousarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        if tri.size and (tri.min() < 0 or tri.max() >= len(pts)):
            raise ValueError("triangle indices out of range")
        pts.flags.writeable = False
        tri.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "triangles", tri)


def _orient2d(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _incircle_det(ax, ay, bx, by, cx, cy, px, py):
    """3x3 lifted-paraboloid determinant; positive = inside for CCW abc."""
    adx = ax - px
    ady = ay - py
    bdx = bx - px
    bdy = by - py
    cdx = cx - px
    cdy = cy - py
    ad2 = adx * adx + ady * ady
    bd2 = bdx * bdx + bdy * bdy
    cd2 = cdx * cdx + cdy * cdy
    return (
        adx * (bdy * cd2 - bd2 * cdy)
        - ady * (bdx * cd2 - bd2 * cdx)
        + ad2 * (bdx * cdy - bdy * cdx)
    )


def in_circumcircle(a, b, c, p) -> CircleSide:
    """Where point ``p`` sits relative to the circle through CCW points a, b, c.

    The determinant is compared against ``1e-10 * scale^4`` with scale the
    largest coordinate magnitude among the four points, so the On verdict
    is scale-free.
    """
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    cx, cy = float(c[0]), float(c[1])
    px, py = float(p[0]), float(p[1])
    orient = _orient2d(ax, ay, bx, by, cx, cy)
    if orient == 0.0:
        raise CollinearTriangleError(f"reference points are collinear: {a}, {b}, {c}")
    det = _incircle_det(ax, ay, bx, by, cx, cy, px, py)
    if orient < 0:
        det = -det
    scale = max(abs(ax), abs(ay), abs(bx), abs(by), abs(cx), abs(cy), abs(px), abs(py), 1e-300)
    if abs(det) <= INCIRCLE_TOLERANCE * scale**4:
        return CircleSide.ON
    return CircleSide.INSIDE if det > 0 else CircleSide.OUTSIDE


class _TriangleStore:
    """Growable structure-of-arrays triangle soup for the insertion loop.

    Super-triangle vertices are treated as points at infinity in the
    eviction predicate: a triangle with one super vertex owns the open
    half-plane beyond its real edge, one with two super vertices owns the
    half-plane past its real vertex in the missing super's direction.
    That is the limit of the circumcircle as the super triangle grows, so
    its finite size can never steal a hull sliver whose circumcircle is
    merely large. The finite surrogate coordinates are used only for
    orientation normalization and point location.
    """

    def __init__(self, points: np.ndarray, n_data: int, super_dirs: np.ndarray, capacity: int) -> None:
        self.points = points
        self.n_data = n_data
        self.super_dirs = super_dirs
        self.verts = np.empty((capacity, 3), dtype=np.int64)
        self.kind = np.empty(capacity, dtype=np.int8)  # number of super vertices (0..2)
        self.pa = np.empty((capacity, 2), dtype=np.float64)
        self.pb = np.empty((capacity, 2), dtype=np.float64)
        self.pc = np.empty((capacity, 2), dtype=np.float64)
        self.scale = np.empty(capacity, dtype=np.float64)
        self.alive = np.zeros(capacity, dtype=bool)
        self.count = 0

    def _grow(self) -> None:
        extra = len(self.verts)
        self.verts = np.concatenate([self.verts, np.empty_like(self.verts)])
        self.kind = np.concatenate([self.kind, np.empty_like(self.kind)])
        self.pa = np.concatenate([self.pa, np.empty_like(self.pa)])
        self.pb = np.concatenate([self.pb, np.empty_like(self.pb)])
        self.pc = np.concatenate([self.pc, np.empty_like(self.pc)])
        self.scale = np.concatenate([self.scale, np.empty_like(self.scale)])
        self.alive = np.concatenate([self.alive, np.zeros(extra, dtype=bool)])

    def add(self, i: int, j: int, k: int) -> None:
        if self.count == len(self.verts):
            self._grow()
        t = self.count
        supers = [v for v in (i, j, k) if v >= self.n_data]
        self.kind[t] = len(supers)
        if len(supers) == 0:
            pa, pb, pc = self.points[i], self.points[j], self.points[k]
            if _orient2d(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1]) < 0:
                j, k = k, j
                pb, pc = pc, pb
            self.pa[t], self.pb[t], self.pc[t] = pa, pb, pc
            self.scale[t] = max(abs(pa[0]), abs(pa[1]), abs(pb[0]), abs(pb[1]), abs(pc[0]), abs(pc[1]))
        elif len(supers) == 1:
            s = supers[0]
            a, b = (v for v in (i, j, k) if v < self.n_data)
            pa, pb, ps = self.points[a], self.points[b], self.points[s]
            # canonical: the super vertex lies left of the directed real edge
            if _orient2d(pa[0], pa[1], pb[0], pb[1], ps[0], ps[1]) < 0:
                a, b = b, a
                pa, pb = pb, pa
            self.pa[t], self.pb[t] = pa, pb
            self.pc[t] = 0.0
            self.scale[t] = 0.0
        elif len(supers) == 2:
            (a,) = (v for v in (i, j, k) if v < self.n_data)
            missing = ({0, 1, 2} - {s - self.n_data for s in supers}).pop()
            self.pa[t] = self.points[a]
            self.pb[t] = self.super_dirs[missing]
            self.pc[t] = 0.0
            self.scale[t] = 0.0
        else:
            # the initial all-super triangle covers the whole plane
            self.pa[t] = self.pb[t] = self.pc[t] = 0.0
            self.scale[t] = 0.0
        self.verts[t] = (i, j, k)
        self.alive[t] = True
        self.count += 1

    def strictly_bad(self, px: float, py: float) -> np.ndarray:
        """Indices of live triangles whose (limit) circumdisk strictly holds p."""
        n = self.count
        pa, pb, pc = self.pa[:n], self.pb[:n], self.pc[:n]
        kind = self.kind[:n]

        det = _incircle_det(
            pa[:, 0], pa[:, 1], pb[:, 0], pb[:, 1], pc[:, 0], pc[:, 1], px, py
        )
        scale = np.maximum(self.scale[:n], max(abs(px), abs(py), 1e-300))
        bad0 = det > INCIRCLE_TOLERANCE * scale**4

        # one super vertex: open half-plane left of the real edge, plus the
        # open segment itself so collinear hull growth can evict the ghost
        ab = pb - pa
        ap_x = px - pa[:, 0]
        ap_y = py - pa[:, 1]
        cross = ab[:, 0] * ap_y - ab[:, 1] * ap_x
        dot = ab[:, 0] * ap_x + ab[:, 1] * ap_y
        ab2 = ab[:, 0] ** 2 + ab[:, 1] ** 2
        bad1 = (cross > 0) | ((cross == 0) & (dot > 0) & (dot < ab2))

        # two super vertices: the limit circumdisk bulges away from the
        # missing super's direction u, so inside means dot(p - a, u) < 0;
        # three supers: the whole plane
        bad2 = ap_x * pb[:, 0] + ap_y * pb[:, 1] < 0

        bad = np.where(
            kind == 0, bad0, np.where(kind == 1, bad1, np.where(kind == 2, bad2, True))
        )
        return np.nonzero(self.alive[:n] & bad)[0]

    def containing(self, px: float, py: float) -> int:
        """First live triangle containing p in surrogate geometry, or -1."""
        n = self.count
        tri = self.points[self.verts[:n]]
        o1 = _orient2d(tri[:, 0, 0], tri[:, 0, 1], tri[:, 1, 0], tri[:, 1, 1], px, py)
        o2 = _orient2d(tri[:, 1, 0], tri[:, 1, 1], tri[:, 2, 0], tri[:, 2, 1], px, py)
        o3 = _orient2d(tri[:, 2, 0], tri[:, 2, 1], tri[:, 0, 0], tri[:, 0, 1], px, py)
        inside = ((o1 >= 0) & (o2 >= 0) & (o3 >= 0)) | ((o1 <= 0) & (o2 <= 0) & (o3 <= 0))
        found = np.nonzero(self.alive[:n] & inside)[0]
        return int(found[0]) if len(found) else -1


def _dedup(points: np.ndarray) -> np.ndarray:
    seen: dict[tuple[int, int], None] = {}
    keep = []
    for idx, (x, y) in enumerate(points):
        key = (int(round(x / DEDUP_TOLERANCE)), int(round(y / DEDUP_TOLERANCE)))
        if key not in seen:
            seen[key] = None
            keep.append(idx)
    return points[keep]


def triangulate_2d(points: Sequence | np.ndarray) -> Triangulation2D:
    """Delaunay triangulation of a planar point set by incremental insertion.

    Needs at least three distinct, not-all-collinear points after
    deduplication. The result covers the convex hull; every triangle's
    circumcircle is empty of other points (cocircular ties keep the
    earlier-inserted diagonal).
    """
    pts = np.asarray([(float(p[0]), float(p[1])) for p in points], dtype=np.float64).reshape(
        -1, 2
    )
    if pts.size and not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    pts = _dedup(pts) if len(pts) else pts
    n = len(pts)
    if n < 3:
        raise TooFewPointsError(f"need at least 3 distinct points, got {n}")

    deltas = pts[1:] - pts[0]
    anchor = deltas[np.nonzero((deltas != 0).any(axis=1))[0][0]]
    if np.all(anchor[0] * deltas[:, 1] - anchor[1] * deltas[:, 0] == 0.0):
        raise AllCollinearError("all points lie on one line")

    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = (lo + hi) / 2.0
    diagonal = float(np.hypot(*(hi - lo)))
    # the eviction predicate treats these as directions at infinity; the
    # finite surrogate positions (well past the 10x-diagonal margin) only
    # serve orientation normalization and point location
    root3_half = np.sqrt(3.0) / 2.0
    super_dirs = np.array([[0.0, 1.0], [-root3_half, -0.5], [root3_half, -0.5]])
    reach = 100.0 * SUPER_TRIANGLE_MARGIN * diagonal
    all_points = np.concatenate([pts, center + reach * super_dirs])

    store = _TriangleStore(all_points, n, super_dirs, capacity=max(16, 4 * n))
    store.add(n, n + 1, n + 2)

    for index in range(n):
        px, py = all_points[index]
        bad = list(store.strictly_bad(px, py))
        if not bad:
            # a sliver in the "on the circle" band can hide the insertion
            # point; fall back to point location
            holder = store.containing(px, py)
            if holder < 0:
                raise RuntimeError("insertion point escaped the triangulation")
            bad = [holder]

        boundary: dict[tuple[int, int], tuple[int, int]] = {}
        for t in bad:
            i, j, k = store.verts[t]
            for u, v in ((i, j), (j, k), (k, i)):
                key = (min(u, v), max(u, v))
                if key in boundary:
                    del boundary[key]
                else:
                    boundary[key] = (int(u), int(v))
            store.alive[t] = False
        for u, v in boundary.values():
            store.add(u, v, index)

    verts = store.verts[: store.count][store.alive[: store.count]]
    real = verts[(verts < n).all(axis=1)]
    return Triangulation2D(pts, real.astype(np.int32))


def prune_edges(triangulation: Triangulation2D, max_edge: float) -> Triangulation2D:
    """Drop every triangle that has an edge longer than ``max_edge``; keep points."""
    if max_edge <= 0:
        raise ValueError(f"max_edge must be positive, got {max_edge}")
    tri = triangulation.triangles
    if len(tri) == 0:
        return triangulation
    pts = triangulation.points
    keep = np.ones(len(tri), dtype=bool)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        lengths = np.linalg.norm(pts[tri[:, a]] - pts[tri[:, b]], axis=1)
        keep &= lengths <= max_edge
    return Triangulation2D(pts, tri[keep])


# marching-squares segments per 4-bit corner case; edges are B(ottom),
# R(ight), T(op), L(eft); ambiguous cases 5 and 10 use a fixed pairing
_MS_SEGMENTS: dict[int, tuple[tuple[str, str], ...]] = {
    0: (),
    1: (("L", "B"),),
    2: (("B", "R"),),
    3: (("L", "R"),),
    4: (("R", "T"),),
    5: (("L", "B"), ("R", "T")),
    6: (("B", "T"),),
    7: (("L", "T"),),
    8: (("T", "L"),),
    9: (("B", "T"),),
    10: (("B", "R"), ("T", "L")),
    11: (("R", "T"),),
    12: (("R", "L"),),
    13: (("B", "R"),),
    14: (("L", "B"),),
    15: (),
}


def _trace_chains(segments: list[tuple[int, int]]) -> list[list[int]]:
    """Split contour segments into vertex chains, deterministically.

    Every contour vertex touches at most two segments. Open chains start
    from their lowest-id endpoint; closed loops from their lowest vertex,
    walking toward the smaller neighbor first.
    """
    neighbors: dict[int, list[int]] = {}
    for a, b in segments:
        neighbors.setdefault(a, []).append(b)
        neighbors.setdefault(b, []).append(a)

    visited: set[tuple[int, int]] = set()
    chains: list[list[int]] = []

    def walk(start: int, first: int) -> list[int]:
        chain = [start, first]
        visited.add((min(start, first), max(start, first)))
        here = first
        while True:
            options = [v for v in neighbors[here] if (min(here, v), max(here, v)) not in visited]
            if not options:
                return chain
            nxt = min(options)
            visited.add((min(here, nxt), max(here, nxt)))
            if nxt == start:
                return chain  # closed loop; do not repeat the start vertex
            chain.append(nxt)
            here = nxt

    endpoints = sorted(v for v, ns in neighbors.items() if len(ns) == 1)
    for v in endpoints:
        remaining = [u for u in neighbors[v] if (min(u, v), max(u, v)) not in visited]
        if remaining:
            chains.append(walk(v, min(remaining)))
    for v in sorted(neighbors):
        remaining = [u for u in neighbors[v] if (min(u, v), max(u, v)) not in visited]
        if remaining:
            chains.append(walk(v, min(remaining)))
    return chains


def extract_slice_points(slice2d: Slice2D, iso: float, step: int = 1) -> list[Point2]:
    """Marching-squares contour vertices of a slice, thinned per contour chain.

    Same conventions as the 3D extractor: strict ``>`` classification and
    linear edge interpolation. Every ``step``-th vertex of each chain is
    kept, in millimetre coordinates.
    """
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    data = slice2d.data
    n1, n0 = data.shape
    if n0 < 2 or n1 < 2:
        return []
    inside = data > np.float32(iso)

    cross_h = inside[:, :-1] != inside[:, 1:]  # (n1, n0-1) between u and u+1
    cross_v = inside[:-1, :] != inside[1:, :]  # (n1-1, n0) between v and v+1

    ids_h = np.full(cross_h.shape, -1, dtype=np.int64)
    vv, uu = np.nonzero(cross_h)
    ids_h[vv, uu] = np.arange(len(vv))
    v1 = data[vv, uu].astype(np.float64)
    v2 = data[vv, uu + 1].astype(np.float64)
    t = np.clip((iso - v1) / (v2 - v1), 0.0, 1.0)
    coords_h = np.stack([uu + t, vv.astype(np.float64)], axis=1)

    ids_v = np.full(cross_v.shape, -1, dtype=np.int64)
    vv2, uu2 = np.nonzero(cross_v)
    ids_v[vv2, uu2] = len(coords_h) + np.arange(len(vv2))
    w1 = data[vv2, uu2].astype(np.float64)
    w2 = data[vv2 + 1, uu2].astype(np.float64)
    s = np.clip((iso - w1) / (w2 - w1), 0.0, 1.0)
    coords_v = np.stack([uu2.astype(np.float64), vv2 + s], axis=1)

    coords = np.concatenate([coords_h, coords_v])

    cases = (
        inside[:-1, :-1].astype(np.int8)
        | (inside[:-1, 1:].astype(np.int8) << 1)
        | (inside[1:, 1:].astype(np.int8) << 2)
        | (inside[1:, :-1].astype(np.int8) << 3)
    )
    segments: list[tuple[int, int]] = []
    for v, u in zip(*np.nonzero((cases != 0) & (cases != 15))):
        edge_vertex = {
            "B": ids_h[v, u],
            "T": ids_h[v + 1, u],
            "L": ids_v[v, u],
            "R": ids_v[v, u + 1],
        }
        for e1, e2 in _MS_SEGMENTS[int(cases[v, u])]:
            segments.append((int(edge_vertex[e1]), int(edge_vertex[e2])))

    sx, sy = slice2d.spacing
    points: list[Point2] = []
    for chain in _trace_chains(segments):
        for vid in chain[::step]:
            u, v = coords[vid]
            points.append(Point2(u * sx, v * sy))
    return points


def _lift_axes(axis: Axis) -> tuple[int, int]:
    return {Axis.X: (1, 2), Axis.Y: (0, 2), Axis.Z: (0, 1)}[axis]


def stack_slices(
    volume: ScalarVolume,
    iso: float,
    axis: Axis = Axis.Z,
    slice_step: int = 1,
    point_step: int = 1,
    max_edge: float = 4.0,
    workers: int = 1,
) -> TriangleMesh:
    """Triangulate every ``slice_step``-th slice and stack the results in 3D.

    Slices yielding fewer than three contour points (or a collinear set)
    contribute nothing. Each surviving 2D vertex lifts to world coordinates
    at its slice's position along ``axis``; the per-slice meshes are
    concatenated, not stitched, and normals come from the 3D field
    gradient. Slices are independent, so they may be processed in parallel;
    output order follows slice index either way.
    """
    if slice_step < 1 or point_step < 1:
        raise ValueError("slice_step and point_step must be >= 1")
    nx, ny, nz = volume.dims
    extent = {Axis.X: nx, Axis.Y: ny, Axis.Z: nz}[axis]
    if extent < 2:
        raise VolumeTooSmallError(f"need at least 2 voxels along {axis.name}, got {extent}")

    a0, a1 = _lift_axes(axis)
    origin = volume.origin
    axis_spacing = volume.spacing[axis.value]

    def build(index: int):
        sl = extract_slice(volume, axis, index)
        pts = extract_slice_points(sl, iso, point_step)
        if len(pts) < 3:
            return None
        try:
            tri = triangulate_2d(pts)
        except (TooFewPointsError, AllCollinearError):
            return None
        tri = prune_edges(tri, max_edge)
        if len(tri.triangles) == 0:
            return None
        referenced = np.unique(tri.triangles)
        remap = np.full(len(tri.points), -1, dtype=np.int64)
        remap[referenced] = np.arange(len(referenced))
        lifted = np.empty((len(referenced), 3), dtype=np.float64)
        lifted[:, a0] = origin[a0] + tri.points[referenced, 0]
        lifted[:, a1] = origin[a1] + tri.points[referenced, 1]
        lifted[:, axis.value] = origin[axis.value] + index * axis_spacing
        return lifted, remap[tri.triangles]

    indices = range(0, extent, slice_step)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(build, indices))
    else:
        results = [build(i) for i in indices]

    pieces = [r for r in results if r is not None]
    if not pieces:
        return TriangleMesh.empty()
    offsets = np.cumsum([0] + [len(p[0]) for p in pieces[:-1]])
    positions = np.concatenate([p[0] for p in pieces]).astype(np.float32)
    triangles = np.concatenate(
        [p[1] + off for p, off in zip(pieces, offsets)]
    ).astype(np.int32)
    mesh = TriangleMesh(positions, np.zeros_like(positions), triangles)
    return compute_normals(volume, mesh)
