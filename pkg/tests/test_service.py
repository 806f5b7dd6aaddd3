import concurrent.futures

import numpy as np
import pytest
from fastapi.testclient import TestClient

from sonoviz.mesh import decode_wire_mesh, mesh_stats
from sonoviz.metaimage import write_volume
from sonoviz.service import create_app
from sonoviz.volume import synth_sphere


@pytest.fixture()
def sphere_bytes():
    vol = synth_sphere((48, 48, 48), (23.5, 23.5, 23.5), 15.0)
    encoded, _ = write_volume(None, vol)
    return encoded


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path / "data")
    with TestClient(app) as c:
        yield c


def upload(client, payload, name="sphere"):
    return client.post(f"/api/datasets?name={name}", content=payload)


class TestDatasetEndpoints:
    def test_fresh_server_lists_nothing(self, client):
        response = client.get("/api/datasets")
        assert response.status_code == 200
        assert response.json() == []

    def test_upload_returns_record(self, client, sphere_bytes):
        response = upload(client, sphere_bytes)
        assert response.status_code == 201
        record = response.json()
        assert record["dims"] == [48, 48, 48]
        assert record["value_range"] == [0.0, 1.0]
        assert record["name"] == "sphere"
        assert len(record["id"]) == 16

    def test_reupload_is_idempotent(self, client, sphere_bytes):
        first = upload(client, sphere_bytes).json()
        second = upload(client, sphere_bytes, name="renamed").json()
        assert first["id"] == second["id"]
        assert second["name"] == "sphere", "original record wins"
        assert len(client.get("/api/datasets").json()) == 1

    def test_get_single_record(self, client, sphere_bytes):
        record = upload(client, sphere_bytes).json()
        fetched = client.get(f"/api/datasets/{record['id']}")
        assert fetched.status_code == 200
        assert fetched.json() == record

    def test_unknown_dataset_404(self, client):
        assert client.get("/api/datasets/deadbeef00000000").status_code == 404

    def test_truncated_upload_400_names_error(self, client, sphere_bytes):
        response = upload(client, sphere_bytes[:-10])
        assert response.status_code == 400
        assert "PayloadTooShort" in response.json()["detail"]

    def test_upload_cap_413(self, tmp_path, sphere_bytes):
        app = create_app(tmp_path / "small", max_upload_bytes=1000)
        with TestClient(app) as small_client:
            assert upload(small_client, sphere_bytes).status_code == 413

    def test_registry_survives_restart(self, tmp_path, sphere_bytes):
        data_dir = tmp_path / "persist"
        with TestClient(create_app(data_dir)) as first:
            record = upload(first, sphere_bytes).json()
        with TestClient(create_app(data_dir)) as second:
            records = second.get("/api/datasets").json()
            assert [r["id"] for r in records] == [record["id"]]
            mesh = second.get(f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso=0.5")
            assert mesh.status_code == 200

    def test_listing_sorted_newest_first(self, client):
        ids = []
        for radius in (5.0, 7.0, 9.0):
            vol = synth_sphere((16, 16, 16), (7.5, 7.5, 7.5), radius)
            payload, _ = write_volume(None, vol)
            ids.append(upload(client, payload, name=f"r{radius}").json()["id"])
        listed = [r["id"] for r in client.get("/api/datasets").json()]
        assert listed == ids[::-1]


class TestMeshEndpoint:
    def test_marching_cubes_sphere_topology(self, client, sphere_bytes):
        record = upload(client, sphere_bytes).json()
        response = client.get(f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso=0.5")
        assert response.status_code == 200
        assert response.headers["content-type"] == "application/octet-stream"
        mesh = decode_wire_mesh(response.content)
        stats = mesh_stats(mesh)
        assert stats.euler_characteristic == 2
        assert stats.boundary_edge_count == 0
        assert int(response.headers["X-Vertex-Count"]) == mesh.vertex_count
        assert int(response.headers["X-Triangle-Count"]) == mesh.triangle_count
        assert float(response.headers["X-Compute-Ms"]) > 0

    def test_iso_changes_vertex_count(self, client, sphere_bytes):
        record = upload(client, sphere_bytes).json()
        low = client.get(f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso=0.25&gaussian=1")
        high = client.get(f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso=0.75&gaussian=1")
        assert low.headers["X-Vertex-Count"] != high.headers["X-Vertex-Count"]

    def test_algorithm_switch_changes_triangles(self, client, sphere_bytes):
        record = upload(client, sphere_bytes).json()
        mc = client.get(f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso=0.5")
        dl = client.get(f"/api/datasets/{record['id']}/mesh?algorithm=delaunay&iso=0.5")
        assert dl.status_code == 200
        assert int(dl.headers["X-Triangle-Count"]) > 0
        assert dl.headers["X-Triangle-Count"] != mc.headers["X-Triangle-Count"]

    def test_repeated_requests_byte_identical(self, client, sphere_bytes):
        record = upload(client, sphere_bytes).json()
        url = f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso=0.5&gaussian=1.0"
        first = client.get(url)
        second = client.get(url)
        assert first.content == second.content

    def test_filter_cache_speeds_up_second_request(self, client, sphere_bytes):
        record = upload(client, sphere_bytes).json()
        url = f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso=0.5&gaussian=1.5&median=1"
        cold = client.get(url)
        warm = client.get(url)
        assert cold.headers["X-Filter-Cache"] == "miss"
        assert warm.headers["X-Filter-Cache"] == "hit"
        assert float(warm.headers["X-Compute-Ms"]) < float(cold.headers["X-Compute-Ms"])

    def test_filter_order_in_query_string_matters(self, client, sphere_bytes):
        record = upload(client, sphere_bytes).json()
        a = client.get(f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso=0.5&gaussian=1&median=1")
        b = client.get(f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso=0.5&median=1&gaussian=1")
        assert a.content != b.content

    def test_delaunay_params(self, client, sphere_bytes):
        record = upload(client, sphere_bytes).json()
        url = (
            f"/api/datasets/{record['id']}/mesh?algorithm=delaunay&iso=0.5"
            "&axis=z&slice_step=2&point_step=1&max_edge=4"
        )
        response = client.get(url)
        assert response.status_code == 200
        mesh = decode_wire_mesh(response.content)
        assert mesh.triangle_count > 0

    def test_unknown_dataset_404(self, client):
        assert client.get("/api/datasets/none/mesh?algorithm=mc&iso=0.5").status_code == 404

    @pytest.mark.parametrize(
        "query, named",
        [
            ("algorithm=mc", "iso"),
            ("iso=0.5", "algorithm"),
            ("algorithm=voxels&iso=0.5", "algorithm"),
            ("algorithm=mc&iso=abc", "iso"),
            ("algorithm=mc&iso=0.5&gaussian=-1", "gaussian"),
            ("algorithm=mc&iso=0.5&median=0", "median"),
            ("algorithm=mc&iso=0.5&slice_step=4", "slice_step"),
            ("algorithm=mc&iso=0.5&axis=z", "axis"),
            ("algorithm=delaunay&iso=0.5&axis=w", "axis"),
            ("algorithm=mc&iso=0.5&sigma=1", "sigma"),
        ],
    )
    def test_invalid_params_422_name_the_parameter(self, client, sphere_bytes, query, named):
        record = upload(client, sphere_bytes).json()
        response = client.get(f"/api/datasets/{record['id']}/mesh?{query}")
        assert response.status_code == 422
        assert named in response.json()["detail"]

    def test_concurrent_distinct_requests_decode_cleanly(self, client, sphere_bytes):
        record = upload(client, sphere_bytes).json()
        isos = [0.2, 0.35, 0.5, 0.65, 0.8]

        def fetch(iso):
            response = client.get(f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso={iso}")
            return iso, response.content

        with concurrent.futures.ThreadPoolExecutor(max_workers=5) as pool:
            results = dict(pool.map(fetch, isos))
        serial = {
            iso: client.get(f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso={iso}").content
            for iso in isos
        }
        for iso in isos:
            decode_wire_mesh(results[iso])
            assert results[iso] == serial[iso]

    def test_stored_bytes_never_mutated(self, client, tmp_path, sphere_bytes):
        record = upload(client, sphere_bytes).json()
        client.get(f"/api/datasets/{record['id']}/mesh?algorithm=mc&iso=0.5&gaussian=2")
        stored = next((tmp_path / "data").glob("*.mha")).read_bytes()
        assert stored == sphere_bytes


class TestRootPage:
    def test_placeholder_served_without_frontend(self, tmp_path):
        app = create_app(tmp_path / "d", static_dir=tmp_path / "missing-dist")
        with TestClient(app) as c:
            response = c.get("/")
            assert response.status_code == 200
            assert "viewer bundle has not been built" in response.text

    def test_static_bundle_served_when_present(self, tmp_path):
        dist = tmp_path / "dist"
        dist.mkdir()
        (dist / "index.html").write_text("<html><body>viewer</body></html>")
        app = create_app(tmp_path / "d", static_dir=dist)
        with TestClient(app) as c:
            response = c.get("/")
            assert response.status_code == 200
            assert "viewer" in response.text
