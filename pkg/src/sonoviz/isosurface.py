"""Marching-cubes isosurface extraction with welded vertices and gradient normals.

Classification is strict: a corner counts as inside only when its value
exceeds the iso level, so an iso equal to the background produces an empty
mesh. Vertices are welded by construction: every crossed grid edge
contributes exactly one vertex, shared by all cells that touch the edge.
Triangles are wound so the right-hand-rule normal points toward decreasing
field values (out of the bright region).

The cell sweep partitions into z-slabs for multithreading; slab fragments
concatenate in slab order against globally numbered vertices, so the output
is bit-identical to a single-threaded run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEdgeError, VolumeTooSmallError
from .mc_tables import CORNER_OFFSETS, EDGE_AXIS, EDGE_OFFSETS, TRI_TABLE
from .mesh import TriangleMesh
from .volume import ScalarVolume

Vec3 = tuple[float, float, float]


def classify_cell(corner_values, iso: float) -> int:
    """Cell configuration index: bit ``b`` set iff corner ``b`` is above iso.

    Values equal to the iso level count as outside. Corner numbering is
    documented in :mod:`sonoviz.mc_tables`.
    """
    index = 0
    for bit, value in enumerate(corner_values):
        if value > iso:
            index |= 1 << bit
    return index


@dataclass(frozen=True)
class CellCase:
    """Triangle layout for one corner configuration.

    ``index`` uses the above-iso bit convention of :func:`classify_cell`;
    the lookup tables store cases by the complementary below-iso index, so
    the mapping flips the bits.
    """

    index: int
    triangle_edges: tuple[tuple[int, int, int], ...]


def cell_case(index: int) -> CellCase:
    if not 0 <= index <= 255:
        raise ValueError(f"cell index must be in [0, 255], got {index}")
    row = TRI_TABLE[255 ^ index]
    triangles = []
    for t in range(5):
        if row[3 * t] < 0:
            break
        triangles.append((int(row[3 * t]), int(row[3 * t + 1]), int(row[3 * t + 2])))
    return CellCase(index, tuple(triangles))


def interpolate_edge(p1: Vec3, v1: float, p2: Vec3, v2: float, iso: float) -> Vec3:
    """Linear iso crossing on the segment p1-p2, with the blend clamped to [0, 1]."""
    if v1 == v2:
        raise DegenerateEdgeError(f"edge endpoints share the value {v1}; no crossing")
    t = (iso - v1) / (v2 - v1)
    t = min(max(t, 0.0), 1.0)
    return (
        p1[0] + t * (p2[0] - p1[0]),
        p1[1] + t * (p2[1] - p1[1]),
        p1[2] + t * (p2[2] - p1[2]),
    )


def _edge_vertices(data: np.ndarray, iso: float, axis: int, volume: ScalarVolume):
    """Interpolated vertices for all crossed grid edges along one axis.

    Returns (vertex-id grid filled with -1, positions array). Positions are
    float32, computed as spacing * voxel coordinate + origin with the
    origin added last, so shifting the origin shifts vertices bitwise.
    """
    inside = data > np.float32(iso)
    sel_lo = [slice(None)] * 3
    sel_hi = [slice(None)] * 3
    data_axis = 2 - axis  # storage is (z, y, x)
    sel_lo[data_axis] = slice(0, -1)
    sel_hi[data_axis] = slice(1, None)
    crossed = inside[tuple(sel_lo)] != inside[tuple(sel_hi)]

    ids = np.full(crossed.shape, -1, dtype=np.int64)
    kk, jj, ii = np.nonzero(crossed)
    ids[kk, jj, ii] = np.arange(len(kk))

    v1 = data[kk, jj, ii]
    step = [0, 0, 0]
    step[data_axis] = 1
    v2 = data[kk + step[0], jj + step[1], ii + step[2]]
    t = np.clip((np.float32(iso) - v1) / (v2 - v1), np.float32(0.0), np.float32(1.0))

    coords = np.empty((len(kk), 3), dtype=np.float32)
    coords[:, 0] = ii
    coords[:, 1] = jj
    coords[:, 2] = kk
    coords[:, axis] += t
    positions = coords * np.asarray(volume.spacing, dtype=np.float32)
    positions += np.asarray(volume.origin, dtype=np.float32)
    return ids, positions


def _slab_triangles(below_index: np.ndarray, vertex_ids, k_lo: int, k_hi: int) -> np.ndarray:
    """Triangles (as global vertex-id triples) for cells with k in [k_lo, k_hi)."""
    kk, jj, ii = np.nonzero(
        (below_index[k_lo:k_hi] != 0) & (below_index[k_lo:k_hi] != 255)
    )
    if len(kk) == 0:
        return np.empty((0, 3), dtype=np.int64)
    kk = kk + k_lo
    cases = below_index[kk, jj, ii]

    cell_vids = np.empty((len(kk), 12), dtype=np.int64)
    for edge in range(12):
        di, dj, dk = EDGE_OFFSETS[edge]
        cell_vids[:, edge] = vertex_ids[EDGE_AXIS[edge]][kk + dk, jj + dj, ii + di]

    rows = TRI_TABLE[cases].astype(np.int64)
    edge_triples = rows[:, :15].reshape(-1, 5, 3)
    valid = edge_triples[:, :, 0] >= 0
    gathered = np.take_along_axis(
        cell_vids, np.clip(edge_triples, 0, 11).reshape(-1, 15), axis=1
    ).reshape(-1, 5, 3)
    return gathered[valid]


def extract_isosurface(volume: ScalarVolume, iso: float, workers: int = 1) -> TriangleMesh:
    """Extract the iso-level surface of a volume as a welded triangle mesh.

    Sweeps all (nx-1)(ny-1)(nz-1) cells through the case tables, placing
    vertices by linear interpolation on crossed grid edges and welding them
    via shared-edge identity. Normals come from the field gradient
    (:func:`compute_normals`). Deterministic for fixed input regardless of
    ``workers``.
    """
    nx, ny, nz = volume.dims
    if min(nx, ny, nz) < 2:
        raise VolumeTooSmallError(f"need at least 2 voxels per axis, got {volume.dims}")
    data = volume.data

    ids_x, pos_x = _edge_vertices(data, iso, 0, volume)
    ids_y, pos_y = _edge_vertices(data, iso, 1, volume)
    ids_z, pos_z = _edge_vertices(data, iso, 2, volume)
    ids_y[ids_y >= 0] += len(pos_x)
    ids_z[ids_z >= 0] += len(pos_x) + len(pos_y)
    positions = np.concatenate([pos_x, pos_y, pos_z])
    vertex_ids = (ids_x, ids_y, ids_z)

    # case index per cell, bit b set when corner b is at or below iso
    # (the tables' native convention; complement of classify_cell's)
    below = (data <= np.float32(iso)).astype(np.uint8)
    below_index = np.zeros((nz - 1, ny - 1, nx - 1), dtype=np.uint8)
    for bit in range(8):
        di, dj, dk = CORNER_OFFSETS[bit]
        below_index |= below[dk : dk + nz - 1, dj : dj + ny - 1, di : di + nx - 1] << np.uint8(bit)

    n_cell_layers = nz - 1
    workers = max(1, min(workers, n_cell_layers))
    if workers == 1:
        triangles = _slab_triangles(below_index, vertex_ids, 0, n_cell_layers)
    else:
        bounds = np.linspace(0, n_cell_layers, workers + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda b: _slab_triangles(below_index, vertex_ids, b[0], b[1]),
                    zip(bounds[:-1], bounds[1:]),
                )
            )
        triangles = np.concatenate(parts) if parts else np.empty((0, 3), dtype=np.int64)

    mesh = TriangleMesh(positions, np.zeros_like(positions), triangles.astype(np.int32))
    return compute_normals(volume, mesh)


def _sample_trilinear(data: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Trilinear field samples at voxel-space points (n, 3), clamped to bounds."""
    nz, ny, nx = data.shape
    x = np.clip(q[:, 0], 0.0, nx - 1.0)
    y = np.clip(q[:, 1], 0.0, ny - 1.0)
    z = np.clip(q[:, 2], 0.0, nz - 1.0)
    x0 = np.minimum(np.floor(x).astype(np.int64), max(nx - 2, 0))
    y0 = np.minimum(np.floor(y).astype(np.int64), max(ny - 2, 0))
    z0 = np.minimum(np.floor(z).astype(np.int64), max(nz - 2, 0))
    fx = x - x0
    fy = y - y0
    fz = z - z0
    x1 = np.minimum(x0 + 1, nx - 1)
    y1 = np.minimum(y0 + 1, ny - 1)
    z1 = np.minimum(z0 + 1, nz - 1)
    d = data.astype(np.float64, copy=False)
    c00 = d[z0, y0, x0] * (1 - fx) + d[z0, y0, x1] * fx
    c01 = d[z0, y1, x0] * (1 - fx) + d[z0, y1, x1] * fx
    c10 = d[z1, y0, x0] * (1 - fx) + d[z1, y0, x1] * fx
    c11 = d[z1, y1, x0] * (1 - fx) + d[z1, y1, x1] * fx
    c0 = c00 * (1 - fy) + c01 * fy
    c1 = c10 * (1 - fy) + c11 * fy
    return c0 * (1 - fz) + c1 * fz


def _face_normals_fallback(mesh: TriangleMesh, needs: np.ndarray, normals: np.ndarray) -> None:
    """Area-weighted face normals for vertices where the gradient vanished."""
    if not needs.any() or mesh.triangle_count == 0:
        normals[needs] = (0.0, 0.0, 1.0)
        return
    pos = mesh.positions.astype(np.float64)
    tri = mesh.triangles
    face = np.cross(pos[tri[:, 1]] - pos[tri[:, 0]], pos[tri[:, 2]] - pos[tri[:, 0]])
    accum = np.zeros_like(pos)
    for corner in range(3):
        np.add.at(accum, tri[:, corner], face)
    lengths = np.linalg.norm(accum, axis=1)
    ok = needs & (lengths > 1e-20)
    normals[ok] = accum[ok] / lengths[ok, None]
    normals[needs & ~ok] = (0.0, 0.0, 1.0)


def compute_normals(volume: ScalarVolume, mesh: TriangleMesh) -> TriangleMesh:
    """Per-vertex normals from the negated field gradient at each vertex.

    The gradient is a central difference of trilinearly sampled values one
    voxel out on each side (one-sided at volume borders). Where it
    vanishes, an area-weighted average of incident face normals steps in.
    """
    if mesh.vertex_count == 0:
        return mesh
    spacing = np.asarray(volume.spacing, dtype=np.float64)
    origin = np.asarray(volume.origin, dtype=np.float64)
    q = (mesh.positions.astype(np.float64) - origin) / spacing
    dims = np.asarray(volume.dims, dtype=np.float64)

    gradient = np.zeros_like(q)
    for axis in range(3):
        hi = np.minimum(q[:, axis] + 1.0, dims[axis] - 1.0)
        lo = np.maximum(q[:, axis] - 1.0, 0.0)
        span = (hi - lo) * spacing[axis]
        qp = q.copy()
        qp[:, axis] = hi
        qm = q.copy()
        qm[:, axis] = lo
        diff = _sample_trilinear(volume.data, qp) - _sample_trilinear(volume.data, qm)
        nonzero = span > 0
        gradient[nonzero, axis] = diff[nonzero] / span[nonzero]

    normals = -gradient
    lengths = np.linalg.norm(normals, axis=1)
    ok = lengths > 1e-12
    normals[ok] /= lengths[ok, None]
    _face_normals_fallback(mesh, ~ok, normals)
    return TriangleMesh(mesh.positions, normals.astype(np.float32), mesh.triangles)
