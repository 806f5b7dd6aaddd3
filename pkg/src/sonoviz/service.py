"""HTTP backend for the interactive viewer.

Datasets are uploaded as raw single-file MetaImage bytes and stored
content-addressed (SHA-256 prefix) under the data directory with a JSON
sidecar, so uploads are idempotent and the registry survives restarts.
Mesh requests run the filter chain (memoized per dataset + chain, small
LRU: a 256^3 float volume is 64 MiB), then the chosen extraction
algorithm, and stream the result in the MSH1 binary wire format. Meshes
themselves are not cached: extraction is cheap next to filtering and the
iso value changes continuously under the viewer's slider.

Endpoints (JSON unless noted):

- ``POST /api/datasets?name=``  raw .mha body -> 201 dataset record
- ``GET /api/datasets``         all records, newest first
- ``GET /api/datasets/{id}``    one record
- ``GET /api/datasets/{id}/mesh?algorithm=mc|delaunay&iso=F...``
  MSH1 bytes with X-Vertex-Count / X-Triangle-Count / X-Compute-Ms
  headers; optional repeatable ``gaussian=``/``median=`` applied in
  query-string order; ``axis``/``slice_step``/``point_step``/``max_edge``
  are accepted only for the delaunay algorithm
- ``/``                         the viewer bundle, when built
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from collections import OrderedDict
from pathlib import Path
from urllib.parse import parse_qsl

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import HTMLResponse, JSONResponse
from starlette.concurrency import run_in_threadpool
from starlette.staticfiles import StaticFiles

from .delaunay import stack_slices
from .errors import MhaError
from .filters import gaussian_filter, median_filter
from .isosurface import extract_isosurface
from .mesh import encode_wire_mesh
from .metaimage import read_volume
from .volume import Axis, ScalarVolume, value_range

DEFAULT_MAX_UPLOAD = 512 * 1024 * 1024
DEFAULT_CACHE_SLOTS = 4

# frontend build output, when the viewer has been compiled
_DEFAULT_STATIC = Path(__file__).resolve().parents[2] / "frontend" / "dist"

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>sonoviz</title></head>
<body><h1>sonoviz service</h1>
<p>The API is live under <code>/api</code>.
The viewer bundle has not been built; see the README for frontend build steps.</p>
</body></html>
"""


class DatasetStore:
    """Content-addressed dataset registry persisted in a directory."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._records: dict[str, dict] = {}
        for sidecar in sorted(self.root.glob("*.json")):
            try:
                record = json.loads(sidecar.read_text())
                self._records[record["id"]] = record
            except (ValueError, KeyError):
                continue  # stray file; ignore rather than refuse to start

    def register(self, payload: bytes, name: str) -> dict:
        dataset_id = hashlib.sha256(payload).hexdigest()[:16]
        with self._lock:
            existing = self._records.get(dataset_id)
        if existing is not None:
            return existing

        _, volume = read_volume(payload)
        lo, hi = value_range(volume)
        record = {
            "id": dataset_id,
            "name": name,
            "dims": list(volume.dims),
            "value_range": [lo, hi],
            "created_at": time.time(),
        }
        with self._lock:
            existing = self._records.get(dataset_id)
            if existing is not None:
                return existing
            blob_path = self.root / f"{dataset_id}.mha"
            tmp = blob_path.with_suffix(".mha.tmp")
            tmp.write_bytes(payload)
            os.replace(tmp, blob_path)
            sidecar = self.root / f"{dataset_id}.json"
            tmp = sidecar.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(record))
            os.replace(tmp, sidecar)
            self._records[dataset_id] = record
        return record

    def get(self, dataset_id: str) -> dict | None:
        with self._lock:
            return self._records.get(dataset_id)

    def records(self) -> list[dict]:
        with self._lock:
            items = list(self._records.values())
        return sorted(items, key=lambda r: (r["created_at"], r["id"]), reverse=True)

    def load_volume(self, dataset_id: str) -> ScalarVolume:
        payload = (self.root / f"{dataset_id}.mha").read_bytes()
        return read_volume(payload)[1]


class VolumeCache:
    """Small LRU of filtered volumes; concurrent reads, serialized inserts."""

    def __init__(self, slots: int) -> None:
        self.slots = slots
        self._lock = threading.Lock()
        self._entries: OrderedDict[tuple, ScalarVolume] = OrderedDict()

    def get_or_compute(self, key: tuple, factory) -> tuple[ScalarVolume, bool]:
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                return self._entries[key], True
        value = factory()  # computed outside the lock; duplicates are benign
        with self._lock:
            self._entries[key] = value
            self._entries.move_to_end(key)
            while len(self._entries) > self.slots:
                self._entries.popitem(last=False)
        return value, False


def _bad_param(message: str):
    raise HTTPException(status_code=422, detail=message)


_ALGORITHMS = {"mc": "mc", "marching_cubes": "mc", "delaunay": "delaunay"}
_DELAUNAY_ONLY = ("axis", "slice_step", "point_step", "max_edge")


def _parse_mesh_query(query: str) -> dict:
    """Validate the mesh query string, preserving filter order."""
    params: dict = {
        "algorithm": None,
        "iso": None,
        "chain": [],
        "axis": Axis.Z,
        "slice_step": 4,
        "point_step": 1,
        "max_edge": 4.0,
    }
    seen_delaunay_keys = []
    for key, value in parse_qsl(query, keep_blank_values=True):
        if key == "algorithm":
            if value not in _ALGORITHMS:
                _bad_param(f"algorithm must be mc or delaunay, got {value!r}")
            params["algorithm"] = _ALGORITHMS[value]
        elif key == "iso":
            try:
                params["iso"] = float(value)
            except ValueError:
                _bad_param(f"iso must be a number, got {value!r}")
            if not math.isfinite(params["iso"]):
                _bad_param("iso must be finite")
        elif key == "gaussian":
            try:
                sigma = float(value)
            except ValueError:
                _bad_param(f"gaussian must be a number, got {value!r}")
            if sigma <= 0 or not math.isfinite(sigma):
                _bad_param(f"gaussian sigma must be > 0, got {value}")
            params["chain"].append(("gaussian", sigma))
        elif key == "median":
            try:
                radius = int(value)
            except ValueError:
                _bad_param(f"median must be an integer, got {value!r}")
            if radius < 1:
                _bad_param(f"median radius must be >= 1, got {value}")
            params["chain"].append(("median", radius))
        elif key == "axis":
            try:
                params["axis"] = Axis.from_name(value)
            except ValueError as exc:
                _bad_param(str(exc))
            seen_delaunay_keys.append(key)
        elif key in ("slice_step", "point_step"):
            try:
                step = int(value)
            except ValueError:
                _bad_param(f"{key} must be an integer, got {value!r}")
            if step < 1:
                _bad_param(f"{key} must be >= 1, got {value}")
            params[key] = step
            seen_delaunay_keys.append(key)
        elif key == "max_edge":
            try:
                params["max_edge"] = float(value)
            except ValueError:
                _bad_param(f"max_edge must be a number, got {value!r}")
            if params["max_edge"] <= 0:
                _bad_param(f"max_edge must be > 0, got {value}")
            seen_delaunay_keys.append(key)
        else:
            _bad_param(f"unknown parameter {key!r}")

    if params["algorithm"] is None:
        _bad_param("algorithm is required (mc or delaunay)")
    if params["iso"] is None:
        _bad_param("iso is required")
    if params["algorithm"] == "mc" and seen_delaunay_keys:
        _bad_param(
            "parameters only valid for algorithm=delaunay: " + ", ".join(seen_delaunay_keys)
        )
    return params


def create_app(
    data_dir: str | Path,
    *,
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD,
    cache_slots: int = DEFAULT_CACHE_SLOTS,
    static_dir: str | Path | None = None,
    compute_workers: int | None = None,
) -> FastAPI:
    """Build the service app around one data directory."""
    store = DatasetStore(Path(data_dir))
    cache = VolumeCache(cache_slots)
    workers = compute_workers or min(4, os.cpu_count() or 1)
    app = FastAPI(title="sonoviz", version="0.1.0")

    @app.post("/api/datasets", status_code=201)
    async def upload_dataset(request: Request, name: str = "unnamed"):
        declared = request.headers.get("content-length")
        if declared and declared.isdigit() and int(declared) > max_upload_bytes:
            raise HTTPException(413, f"payload exceeds the {max_upload_bytes}-byte cap")
        payload = await request.body()
        if len(payload) > max_upload_bytes:
            raise HTTPException(413, f"payload exceeds the {max_upload_bytes}-byte cap")
        try:
            record = await run_in_threadpool(store.register, payload, name)
        except MhaError as exc:
            raise HTTPException(400, f"{type(exc).__name__}: {exc}") from exc
        return JSONResponse(record, status_code=201)

    @app.get("/api/datasets")
    def list_datasets():
        return store.records()

    @app.get("/api/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        record = store.get(dataset_id)
        if record is None:
            raise HTTPException(404, f"unknown dataset {dataset_id!r}")
        return record

    @app.get("/api/datasets/{dataset_id}/mesh")
    def get_mesh(dataset_id: str, request: Request):
        record = store.get(dataset_id)
        if record is None:
            raise HTTPException(404, f"unknown dataset {dataset_id!r}")
        params = _parse_mesh_query(request.url.query)

        started = time.perf_counter()
        cache_key = (dataset_id, tuple(params["chain"]))

        def build_volume() -> ScalarVolume:
            volume = store.load_volume(dataset_id)
            for kind, value in params["chain"]:
                if kind == "gaussian":
                    volume = gaussian_filter(volume, value, workers=workers)
                else:
                    volume = median_filter(volume, value, workers=workers)
            return volume

        volume, cache_hit = cache.get_or_compute(cache_key, build_volume)
        if params["algorithm"] == "mc":
            mesh = extract_isosurface(volume, params["iso"], workers=workers)
        else:
            mesh = stack_slices(
                volume,
                params["iso"],
                params["axis"],
                slice_step=params["slice_step"],
                point_step=params["point_step"],
                max_edge=params["max_edge"],
                workers=workers,
            )
        blob = encode_wire_mesh(mesh)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return Response(
            content=blob,
            media_type="application/octet-stream",
            headers={
                "X-Vertex-Count": str(mesh.vertex_count),
                "X-Triangle-Count": str(mesh.triangle_count),
                "X-Compute-Ms": f"{elapsed_ms:.2f}",
                "X-Filter-Cache": "hit" if cache_hit else "miss",
            },
        )

    bundle = Path(static_dir) if static_dir is not None else _DEFAULT_STATIC
    if bundle.is_dir() and (bundle / "index.html").exists():
        app.mount("/", StaticFiles(directory=bundle, html=True), name="viewer")
    else:

        @app.get("/", response_class=HTMLResponse)
        def placeholder():
            return _PLACEHOLDER_PAGE

    return app


def serve(host: str = "127.0.0.1", port: int = 8000, data_dir: str = "./sonoviz-data") -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="info")
