"""Triangle mesh container, hygiene, topology metrics, and export formats.

Exports are deterministic: the same mesh always serializes to the same
bytes. ASCII formats round coordinates to 6 significant digits; the MSH1
binary wire format preserves floats bit for bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import MeshTooLargeError, WireFormatError

WIRE_MAGIC = b"MSH1"


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle set with per-vertex positions and normals (mm).

    ``positions`` and ``normals`` are (n, 3) float32, ``triangles`` is
    (m, 3) int32 with every index below n.
    """

    positions: np.ndarray
    normals: np.ndarray
    triangles: np.ndarray

    def __post_init__(self) -> None:
        pos = np.ascontiguousarray(self.positions, dtype=np.float32).reshape(-1, 3)
        nrm = np.ascontiguousarray(self.normals, dtype=np.float32).reshape(-1, 3)
        tri = np.ascontiguousarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        if nrm.shape != pos.shape:
            raise ValueError("normals must match positions in shape")
        if tri.size and (tri.min() < 0 or tri.max() >= len(pos)):
            raise ValueError("triangle indices out of range")
        for arr in (pos, nrm, tri):
            arr.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "normals", nrm)
        object.__setattr__(self, "triangles", tri)

    @classmethod
    def empty(cls) -> "TriangleMesh":
        return cls(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32))

    @property
    def vertex_count(self) -> int:
        return len(self.positions)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)


@dataclass(frozen=True)
class MeshStats:
    """Counts and topology numbers for one mesh.

    ``euler_characteristic`` is V - E + F; a closed genus-0 surface gives 2
    with zero boundary edges.
    """

    vertex_count: int
    triangle_count: int
    edge_count: int
    euler_characteristic: int
    boundary_edge_count: int
    bbox_min: tuple[float, float, float]
    bbox_max: tuple[float, float, float]


def _edge_codes(triangles: np.ndarray) -> np.ndarray:
    """Each undirected edge as a single int64 code (low index * 2^32 + high)."""
    pairs = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    ).astype(np.int64)
    lo = pairs.min(axis=1)
    hi = pairs.max(axis=1)
    return (lo << 32) | hi


def mesh_stats(mesh: TriangleMesh) -> MeshStats:
    """Exact vertex/edge/triangle counts, Euler characteristic, and bbox."""
    v = mesh.vertex_count
    f = mesh.triangle_count
    if f:
        codes, counts = np.unique(_edge_codes(mesh.triangles), return_counts=True)
        e = len(codes)
        boundary = int(np.count_nonzero(counts == 1))
    else:
        e = 0
        boundary = 0
    if v:
        bbox_min = tuple(float(x) for x in mesh.positions.min(axis=0))
        bbox_max = tuple(float(x) for x in mesh.positions.max(axis=0))
    else:
        bbox_min = bbox_max = (0.0, 0.0, 0.0)
    return MeshStats(v, f, e, v - e + f, boundary, bbox_min, bbox_max)


def weld_vertices(mesh: TriangleMesh, epsilon: float = 0.0) -> TriangleMesh:
    """Merge vertices that fall into the same epsilon-sized grid cell.

    Quantized-grid snapping, not all-pairs search: O(n), but points within
    epsilon that straddle a cell boundary stay separate (the extractors
    already weld exactly, so this only mops up external meshes). Triangles
    that collapse to a repeated index are dropped, then vertices left
    unreferenced are compacted away. Merged normals are renormalized
    averages. Idempotent at fixed epsilon.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if mesh.vertex_count == 0:
        return TriangleMesh.empty()

    if epsilon == 0:
        keys = mesh.positions.copy().view(np.uint32)
    else:
        keys = np.floor(mesh.positions.astype(np.float64) / epsilon).astype(np.int64)
    _, first_idx, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    # renumber merged groups in first-appearance order for determinism
    order = np.argsort(first_idx, kind="stable")
    rank = np.empty(len(order), dtype=np.int64)
    rank[order] = np.arange(len(order))
    vertex_to_group = rank[inverse]
    group_rep = first_idx[order]

    tris = vertex_to_group[mesh.triangles.astype(np.int64)]
    ok = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    tris = tris[ok]

    referenced = np.unique(tris)
    compact = np.full(len(group_rep), -1, dtype=np.int64)
    compact[referenced] = np.arange(len(referenced))

    if len(referenced) == 0:
        return TriangleMesh.empty()

    # group-averaged normals, renormalized
    sums = np.zeros((len(group_rep), 3), dtype=np.float64)
    np.add.at(sums, vertex_to_group, mesh.normals.astype(np.float64))
    lengths = np.linalg.norm(sums, axis=1)
    fallback = mesh.normals[group_rep].astype(np.float64)
    safe = lengths > 1e-12
    merged_normals = np.where(safe[:, None], sums / np.where(safe, lengths, 1.0)[:, None], fallback)

    return TriangleMesh(
        mesh.positions[group_rep[referenced]],
        merged_normals[referenced],
        compact[tris],
    )


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def export_obj(mesh: TriangleMesh) -> str:
    """Wavefront OBJ with positions and normals, 1-based ``f a//a`` faces."""
    lines = [f"# surface mesh: {mesh.vertex_count} vertices, {mesh.triangle_count} triangles"]
    for x, y, z in mesh.positions:
        lines.append(f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}")
    for x, y, z in mesh.normals:
        lines.append(f"vn {_fmt(x)} {_fmt(y)} {_fmt(z)}")
    for a, b, c in mesh.triangles + 1:
        lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
    return "\n".join(lines) + "\n"


def export_vtk_legacy(mesh: TriangleMesh) -> str:
    """Legacy ASCII VTK POLYDATA with a POINT_DATA NORMALS section."""
    lines = [
        "# vtk DataFile Version 3.0",
        "surface mesh",
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {mesh.vertex_count} float",
    ]
    for x, y, z in mesh.positions:
        lines.append(f"{_fmt(x)} {_fmt(y)} {_fmt(z)}")
    lines.append(f"POLYGONS {mesh.triangle_count} {4 * mesh.triangle_count}")
    for a, b, c in mesh.triangles:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"POINT_DATA {mesh.vertex_count}")
    lines.append("NORMALS normals float")
    for x, y, z in mesh.normals:
        lines.append(f"{_fmt(x)} {_fmt(y)} {_fmt(z)}")
    return "\n".join(lines) + "\n"


def encode_wire_mesh(mesh: TriangleMesh) -> bytes:
    """MSH1 binary layout: magic, u32 counts, f32 positions/normals, u32 indices.

    Everything little-endian; floats survive a round trip bit for bit.
    """
    if mesh.vertex_count >= 2**32 or mesh.triangle_count >= 2**32:
        raise MeshTooLargeError("mesh exceeds 32-bit wire-format counts")
    header = struct.pack("<4sII", WIRE_MAGIC, mesh.vertex_count, mesh.triangle_count)
    return (
        header
        + mesh.positions.astype("<f4").tobytes()
        + mesh.normals.astype("<f4").tobytes()
        + mesh.triangles.astype("<u4").tobytes()
    )


def decode_wire_mesh(blob: bytes) -> TriangleMesh:
    """Inverse of :func:`encode_wire_mesh`; rejects bad magic or wrong length."""
    if len(blob) < 12:
        raise WireFormatError(f"truncated body: {len(blob)} bytes, need at least 12")
    magic, n_vertices, n_triangles = struct.unpack_from("<4sII", blob)
    if magic != WIRE_MAGIC:
        raise WireFormatError(f"bad magic {magic!r}, expected {WIRE_MAGIC!r}")
    expected = 12 + n_vertices * 24 + n_triangles * 12
    if len(blob) != expected:
        raise WireFormatError(f"truncated body: {len(blob)} bytes, expected {expected}")
    pos_end = 12 + n_vertices * 12
    nrm_end = pos_end + n_vertices * 12
    positions = np.frombuffer(blob, dtype="<f4", count=n_vertices * 3, offset=12)
    normals = np.frombuffer(blob, dtype="<f4", count=n_vertices * 3, offset=pos_end)
    indices = np.frombuffer(blob, dtype="<u4", count=n_triangles * 3, offset=nrm_end)
    if indices.size and indices.max() >= max(n_vertices, 1):
        raise WireFormatError("triangle index out of range")
    return TriangleMesh(
        positions.reshape(-1, 3),
        normals.reshape(-1, 3),
        indices.reshape(-1, 3).astype(np.int32),
    )
