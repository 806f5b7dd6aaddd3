import numpy as np
import pytest

from sonoviz.errors import MeshTooLargeError, WireFormatError
from sonoviz.mesh import (
    TriangleMesh,
    decode_wire_mesh,
    encode_wire_mesh,
    export_obj,
    export_vtk_legacy,
    mesh_stats,
    weld_vertices,
)


def single_triangle():
    return TriangleMesh(
        positions=np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.float32),
        normals=np.eye(3, dtype=np.float32),
        triangles=np.array([[0, 1, 2]], dtype=np.int32),
    )


def tetrahedron():
    positions = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.float32)
    normals = np.tile([0, 0, 1], (4, 1)).astype(np.float32)
    triangles = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]], dtype=np.int32)
    return TriangleMesh(positions, normals, triangles)


def parse_obj(text):
    """Minimal independent OBJ reader for round-trip checks."""
    vs, vns, fs = [], [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            vs.append([float(x) for x in parts[1:4]])
        elif parts[0] == "vn":
            vns.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            fs.append([int(tok.split("//")[0]) - 1 for tok in parts[1:4]])
    return np.array(vs), np.array(vns), np.array(fs)


class TestTriangleMesh:
    def test_rejects_out_of_range_indices(self):
        with pytest.raises(ValueError):
            TriangleMesh(
                np.zeros((2, 3), dtype=np.float32),
                np.zeros((2, 3), dtype=np.float32),
                np.array([[0, 1, 2]], dtype=np.int32),
            )

    def test_rejects_mismatched_normals(self):
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((2, 3)), np.zeros((3, 3)), np.zeros((0, 3), dtype=np.int32))

    def test_empty(self):
        mesh = TriangleMesh.empty()
        assert mesh.vertex_count == 0 and mesh.triangle_count == 0


class TestWeldVertices:
    def test_epsilon_zero_identity_on_welded_mesh(self):
        mesh = tetrahedron()
        out = weld_vertices(mesh, 0.0)
        assert np.array_equal(out.positions, mesh.positions)
        assert np.array_equal(out.triangles, mesh.triangles)

    def test_merges_exact_duplicates(self):
        # two triangles sharing 3 duplicated vertices
        positions = np.array(
            [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 0], [1, 0, 0], [1, 1, 0]],
            dtype=np.float32,
        )
        normals = np.tile([0, 0, 1], (6, 1)).astype(np.float32)
        triangles = np.array([[0, 1, 2], [3, 4, 5]], dtype=np.int32)
        out = weld_vertices(TriangleMesh(positions, normals, triangles), 1e-6)
        assert out.vertex_count == 4
        assert out.triangle_count == 2
        assert np.array_equal(out.triangles, [[0, 1, 2], [0, 1, 3]])

    def test_coincident_triangles_leave_three_vertices(self):
        positions = np.array(
            [[0, 0, 0], [1, 0, 0], [0, 1, 0]] * 2,
            dtype=np.float32,
        )
        normals = np.tile([0, 0, 1], (6, 1)).astype(np.float32)
        triangles = np.array([[0, 1, 2], [3, 4, 5]], dtype=np.int32)
        out = weld_vertices(TriangleMesh(positions, normals, triangles), 1e-6)
        assert out.vertex_count == 3
        assert out.triangle_count == 2

    def test_degenerate_triangle_dropped_and_compacted(self):
        positions = np.array([[0, 0, 0], [1e-7, 0, 0], [0, 1, 0]], dtype=np.float32)
        normals = np.tile([0, 0, 1], (3, 1)).astype(np.float32)
        triangles = np.array([[0, 1, 2]], dtype=np.int32)
        out = weld_vertices(TriangleMesh(positions, normals, triangles), 1e-6)
        assert out.triangle_count == 0
        assert out.vertex_count == 0

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        positions = rng.random((30, 3)).astype(np.float32)
        normals = np.tile([0, 0, 1], (30, 1)).astype(np.float32)
        triangles = rng.integers(0, 30, size=(40, 3)).astype(np.int32)
        mesh = TriangleMesh(positions, normals, triangles)
        once = weld_vertices(mesh, 0.05)
        twice = weld_vertices(once, 0.05)
        assert np.array_equal(once.positions, twice.positions)
        assert np.array_equal(once.triangles, twice.triangles)

    def test_merged_normals_are_renormalized_averages(self):
        positions = np.array([[0, 0, 0], [0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=np.float32)
        normals = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 1]], dtype=np.float32)
        triangles = np.array([[0, 2, 3], [1, 2, 3]], dtype=np.int32)
        out = weld_vertices(TriangleMesh(positions, normals, triangles), 1e-6)
        merged = out.normals[0]
        expected = np.array([1, 1, 0]) / np.sqrt(2)
        assert np.allclose(merged, expected, atol=1e-6)


class TestMeshStats:
    def test_single_triangle(self):
        stats = mesh_stats(single_triangle())
        assert (stats.vertex_count, stats.edge_count, stats.triangle_count) == (3, 3, 1)
        assert stats.euler_characteristic == 1
        assert stats.boundary_edge_count == 3

    def test_tetrahedron(self):
        stats = mesh_stats(tetrahedron())
        assert (stats.vertex_count, stats.edge_count, stats.triangle_count) == (4, 6, 4)
        assert stats.euler_characteristic == 2
        assert stats.boundary_edge_count == 0

    def test_empty(self):
        stats = mesh_stats(TriangleMesh.empty())
        assert stats.vertex_count == 0
        assert stats.euler_characteristic == 0

    def test_bbox(self):
        stats = mesh_stats(single_triangle())
        assert stats.bbox_min == (0.0, 0.0, 0.0)
        assert stats.bbox_max == (1.0, 1.0, 1.0)


class TestExportObj:
    def test_single_triangle_layout(self):
        text = export_obj(single_triangle())
        lines = text.strip().splitlines()
        assert lines[0].startswith("#")
        assert sum(1 for l in lines if l.startswith("v ")) == 3
        assert sum(1 for l in lines if l.startswith("vn ")) == 3
        assert lines[-1] == "f 1//1 2//2 3//3"

    def test_empty_mesh_header_only(self):
        text = export_obj(TriangleMesh.empty())
        lines = text.strip().splitlines()
        assert len(lines) == 1 and lines[0].startswith("#")

    def test_round_trip_positions(self):
        rng = np.random.default_rng(11)
        positions = (rng.random((20, 3)) * 100 - 50).astype(np.float32)
        normals = np.tile([0, 0, 1], (20, 1)).astype(np.float32)
        triangles = rng.integers(0, 20, size=(10, 3)).astype(np.int32)
        mesh = TriangleMesh(positions, normals, triangles)
        vs, vns, fs = parse_obj(export_obj(mesh))
        assert np.allclose(vs, positions, atol=1e-4, rtol=1e-5)
        assert np.array_equal(fs, triangles)

    def test_deterministic(self):
        assert export_obj(tetrahedron()) == export_obj(tetrahedron())


class TestExportVtk:
    def test_single_triangle_sections(self):
        text = export_vtk_legacy(single_triangle())
        assert text.startswith("# vtk DataFile Version 3.0\n")
        assert "ASCII" in text
        assert "DATASET POLYDATA" in text
        assert "POINTS 3 float" in text
        assert "POLYGONS 1 4" in text
        assert "POINT_DATA 3" in text
        assert "NORMALS normals float" in text

    def test_empty_mesh(self):
        text = export_vtk_legacy(TriangleMesh.empty())
        assert "POINTS 0 float" in text
        assert "POLYGONS 0 0" in text

    def test_deterministic(self):
        assert export_vtk_legacy(tetrahedron()) == export_vtk_legacy(tetrahedron())


class TestWireFormat:
    def test_empty_mesh_is_twelve_bytes(self):
        blob = encode_wire_mesh(TriangleMesh.empty())
        assert len(blob) == 12
        assert blob[:4] == b"MSH1"

    def test_single_triangle_is_ninety_six_bytes(self):
        blob = encode_wire_mesh(single_triangle())
        assert len(blob) == 12 + 3 * 12 + 3 * 12 + 12 == 96

    def test_round_trip_exact(self):
        rng = np.random.default_rng(5)
        positions = (rng.random((40, 3)) * 1000 - 500).astype(np.float32)
        normals = rng.standard_normal((40, 3)).astype(np.float32)
        triangles = rng.integers(0, 40, size=(25, 3)).astype(np.int32)
        mesh = TriangleMesh(positions, normals, triangles)
        out = decode_wire_mesh(encode_wire_mesh(mesh))
        assert np.array_equal(
            out.positions.view(np.uint32), mesh.positions.view(np.uint32)
        ), "float bits must survive"
        assert np.array_equal(out.normals.view(np.uint32), mesh.normals.view(np.uint32))
        assert np.array_equal(out.triangles, mesh.triangles)

    def test_encode_decode_encode_stable(self):
        blob = encode_wire_mesh(single_triangle())
        assert encode_wire_mesh(decode_wire_mesh(blob)) == blob

    def test_bad_magic(self):
        blob = b"XXXX" + encode_wire_mesh(single_triangle())[4:]
        with pytest.raises(WireFormatError, match="magic"):
            decode_wire_mesh(blob)

    def test_truncated(self):
        blob = encode_wire_mesh(single_triangle())
        with pytest.raises(WireFormatError, match="truncated"):
            decode_wire_mesh(blob[:-1])
        with pytest.raises(WireFormatError):
            decode_wire_mesh(blob[:8])

    def test_mesh_too_large_guard(self):
        # exercise the count guard without allocating 2^32 vertices
        mesh = single_triangle()

        class Huge:
            vertex_count = 2**32
            triangle_count = 0
            positions = mesh.positions
            normals = mesh.normals
            triangles = mesh.triangles

        with pytest.raises(MeshTooLargeError):
            encode_wire_mesh(Huge())
