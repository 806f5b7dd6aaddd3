/**
 * Typed client for the sonoviz HTTP API.
 *
 * The mesh endpoint returns MSH1 bytes with stats in response headers;
 * everything else is JSON. Filter parameters go into the query string in
 * a fixed order (median before gaussian), matching how the server applies
 * them.
 */

import { decodeWireMesh, WireMesh } from "./wire.js";

export interface DatasetRecord {
  id: string;
  name: string;
  dims: [number, number, number];
  value_range: [number, number];
  created_at: number;
}

export type Algorithm = "mc" | "delaunay";
export type SliceAxis = "x" | "y" | "z";

export interface MeshParams {
  datasetId: string;
  algorithm: Algorithm;
  iso: number;
  /** median filter radius, when enabled */
  median?: number;
  /** gaussian filter sigma, when enabled */
  gaussian?: number;
  /** delaunay-only knobs; must stay unset for marching cubes */
  axis?: SliceAxis;
  sliceStep?: number;
  maxEdge?: number;
}

export interface MeshStatsInfo {
  vertexCount: number;
  triangleCount: number;
  computeMs: number;
}

export interface MeshResponse {
  mesh: WireMesh;
  stats: MeshStatsInfo;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") {
      return body.detail;
    }
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `request failed with HTTP ${response.status}`;
}

export function meshQuery(params: MeshParams): string {
  const query = new URLSearchParams();
  query.set("algorithm", params.algorithm);
  query.set("iso", String(params.iso));
  if (params.median !== undefined) {
    query.set("median", String(params.median));
  }
  if (params.gaussian !== undefined) {
    query.set("gaussian", String(params.gaussian));
  }
  if (params.algorithm === "delaunay") {
    if (params.axis !== undefined) {
      query.set("axis", params.axis);
    }
    if (params.sliceStep !== undefined) {
      query.set("slice_step", String(params.sliceStep));
    }
    if (params.maxEdge !== undefined) {
      query.set("max_edge", String(params.maxEdge));
    }
  }
  return query.toString();
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  listDatasets(): Promise<DatasetRecord[]> {
    return this.requestJson<DatasetRecord[]>("/api/datasets");
  }

  getDataset(id: string): Promise<DatasetRecord> {
    return this.requestJson<DatasetRecord>(`/api/datasets/${id}`);
  }

  uploadDataset(payload: ArrayBuffer | Blob, name: string): Promise<DatasetRecord> {
    const query = new URLSearchParams({ name });
    return this.requestJson<DatasetRecord>(`/api/datasets?${query}`, {
      method: "POST",
      body: payload,
      headers: { "content-type": "application/octet-stream" },
    });
  }

  async fetchMesh(params: MeshParams): Promise<MeshResponse> {
    const url = `${this.baseUrl}/api/datasets/${params.datasetId}/mesh?${meshQuery(params)}`;
    const response = await this.fetchImpl(url);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    const mesh = decodeWireMesh(await response.arrayBuffer());
    return {
      mesh,
      stats: {
        vertexCount: Number(response.headers.get("X-Vertex-Count") ?? mesh.vertexCount),
        triangleCount: Number(response.headers.get("X-Triangle-Count") ?? mesh.triangleCount),
        computeMs: Number(response.headers.get("X-Compute-Ms") ?? 0),
      },
    };
  }
}
