"""Drive the visualization service end to end, in process.

Walks the exact HTTP surface the browser viewer uses: upload a dataset,
list it, request meshes with different algorithms and thresholds, and
watch the filtered-volume cache kick in on the second request. Uses the
in-process test client, so no port is opened; `sonoviz serve` runs the
same app for real.
"""

import tempfile

from fastapi.testclient import TestClient

from sonoviz import decode_wire_mesh, synth_sphere, write_volume
from sonoviz.service import create_app

payload, _ = write_volume(None, synth_sphere((64, 64, 64), (31.5, 31.5, 31.5), 20.0))

with tempfile.TemporaryDirectory() as data_dir:
    client = TestClient(create_app(data_dir))

    record = client.post("/api/datasets?name=demo-sphere", content=payload).json()
    print("uploaded:", record["id"], record["name"], record["dims"], record["value_range"])
    print("datasets listed:", [r["name"] for r in client.get("/api/datasets").json()])

    base = f"/api/datasets/{record['id']}/mesh"
    for query in (
        "algorithm=mc&iso=0.5&gaussian=1",
        "algorithm=mc&iso=0.5&gaussian=1",  # second hit: filter cache warm
        "algorithm=mc&iso=0.75&gaussian=1",
        "algorithm=delaunay&iso=0.5&slice_step=4&max_edge=4",
    ):
        response = client.get(f"{base}?{query}")
        mesh = decode_wire_mesh(response.content)
        print(
            f"{query:48s} -> {mesh.vertex_count:6d} v, {mesh.triangle_count:6d} t, "
            f"{response.headers['X-Compute-Ms']:>8s} ms, "
            f"cache {response.headers['X-Filter-Cache']}"
        )
