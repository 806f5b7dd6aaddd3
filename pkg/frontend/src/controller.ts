/**
 * Viewer state and the request lifecycle behind the controls.
 *
 * Continuous controls (the iso slider, filter value edits) are debounced
 * with a trailing 150 ms window so a drag issues one request, not one per
 * pixel. Discrete actions (dataset selection, algorithm switch, filter
 * toggles) refresh immediately. Every request gets a sequence number;
 * responses that arrive after a newer request was issued are discarded,
 * so the rendered mesh always matches the latest issued parameters.
 * Failed requests surface through the error callback and leave the
 * current mesh untouched.
 */

import {
  Algorithm,
  ApiClient,
  DatasetRecord,
  MeshParams,
  MeshStatsInfo,
  SliceAxis,
} from "./api.js";
import { WireMesh } from "./wire.js";

export interface MeshRenderer {
  /** Replace the displayed geometry; null clears the scene. */
  setMesh(mesh: WireMesh | null): void;
}

export interface ViewerState {
  dataset: DatasetRecord | null;
  algorithm: Algorithm;
  iso: number;
  medianEnabled: boolean;
  medianRadius: number;
  gaussianEnabled: boolean;
  gaussianSigma: number;
  axis: SliceAxis;
  sliceStep: number;
  maxEdge: number;
}

export interface RenderedMesh {
  params: MeshParams;
  stats: MeshStatsInfo;
}

export interface ControllerOptions {
  api: ApiClient;
  renderer: MeshRenderer;
  /** called after a response is rendered (stats readout) */
  onRendered?: (update: RenderedMesh) => void;
  /** called with a human-readable message on request/decode failure */
  onError?: (message: string) => void;
  debounceMs?: number;
}

export const DEFAULT_DEBOUNCE_MS = 150;

export class ViewerController {
  readonly state: ViewerState = {
    dataset: null,
    algorithm: "mc",
    iso: 0,
    medianEnabled: false,
    medianRadius: 1,
    gaussianEnabled: false,
    gaussianSigma: 1.0,
    axis: "z",
    sliceStep: 4,
    maxEdge: 4.0,
  };

  /** requests actually issued over the wire (observable for tests) */
  issuedRequests = 0;

  private readonly api: ApiClient;
  private readonly renderer: MeshRenderer;
  private readonly onRendered?: (update: RenderedMesh) => void;
  private readonly onError?: (message: string) => void;
  private readonly debounceMs: number;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private sequence = 0;
  private pendingRequests = 0;
  private lastRendered: RenderedMesh | null = null;

  constructor(options: ControllerOptions) {
    this.api = options.api;
    this.renderer = options.renderer;
    this.onRendered = options.onRendered;
    this.onError = options.onError;
    this.debounceMs = options.debounceMs ?? DEFAULT_DEBOUNCE_MS;
  }

  /** The render the viewer currently shows, with its request parameters. */
  get rendered(): RenderedMesh | null {
    return this.lastRendered;
  }

  get isoRange(): [number, number] {
    return this.state.dataset ? this.state.dataset.value_range : [0, 1];
  }

  selectDataset(record: DatasetRecord): void {
    this.state.dataset = record;
    const [lo, hi] = record.value_range;
    this.state.iso = (lo + hi) / 2;
    this.refreshNow();
  }

  /** Slider input: clamped to the dataset's value range, debounced. */
  setIso(value: number): void {
    const [lo, hi] = this.isoRange;
    this.state.iso = Math.min(Math.max(value, lo), hi);
    this.scheduleRefresh();
  }

  setAlgorithm(algorithm: Algorithm): void {
    if (this.state.algorithm !== algorithm) {
      this.state.algorithm = algorithm;
      this.refreshNow();
    }
  }

  setMedianEnabled(enabled: boolean): void {
    this.state.medianEnabled = enabled;
    this.refreshNow();
  }

  setMedianRadius(radius: number): void {
    this.state.medianRadius = Math.max(1, Math.round(radius));
    if (this.state.medianEnabled) {
      this.scheduleRefresh();
    }
  }

  setGaussianEnabled(enabled: boolean): void {
    this.state.gaussianEnabled = enabled;
    this.refreshNow();
  }

  setGaussianSigma(sigma: number): void {
    if (sigma > 0) {
      this.state.gaussianSigma = sigma;
      if (this.state.gaussianEnabled) {
        this.scheduleRefresh();
      }
    }
  }

  setAxis(axis: SliceAxis): void {
    this.state.axis = axis;
    if (this.state.algorithm === "delaunay") {
      this.refreshNow();
    }
  }

  setSliceStep(step: number): void {
    this.state.sliceStep = Math.max(1, Math.round(step));
    if (this.state.algorithm === "delaunay") {
      this.scheduleRefresh();
    }
  }

  setMaxEdge(edge: number): void {
    if (edge > 0) {
      this.state.maxEdge = edge;
      if (this.state.algorithm === "delaunay") {
        this.scheduleRefresh();
      }
    }
  }

  buildParams(): MeshParams | null {
    if (!this.state.dataset) {
      return null;
    }
    const params: MeshParams = {
      datasetId: this.state.dataset.id,
      algorithm: this.state.algorithm,
      iso: this.state.iso,
    };
    if (this.state.medianEnabled) {
      params.median = this.state.medianRadius;
    }
    if (this.state.gaussianEnabled) {
      params.gaussian = this.state.gaussianSigma;
    }
    if (this.state.algorithm === "delaunay") {
      params.axis = this.state.axis;
      params.sliceStep = this.state.sliceStep;
      params.maxEdge = this.state.maxEdge;
    }
    return params;
  }

  /** Trailing-edge debounce: one request per quiet period. */
  scheduleRefresh(): void {
    if (this.debounceTimer !== null) {
      clearTimeout(this.debounceTimer);
    }
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      void this.refresh();
    }, this.debounceMs);
  }

  refreshNow(): void {
    if (this.debounceTimer !== null) {
      clearTimeout(this.debounceTimer);
      this.debounceTimer = null;
    }
    void this.refresh();
  }

  /** Resolves when this particular request has been rendered or discarded. */
  async refresh(): Promise<void> {
    const params = this.buildParams();
    if (!params) {
      return;
    }
    const ticket = ++this.sequence;
    this.issuedRequests += 1;
    this.pendingRequests += 1;
    try {
      const { mesh, stats } = await this.api.fetchMesh(params);
      if (ticket !== this.sequence) {
        return; // superseded by a newer request
      }
      this.renderer.setMesh(mesh);
      this.lastRendered = { params, stats };
      this.onRendered?.(this.lastRendered);
    } catch (error) {
      if (ticket !== this.sequence) {
        return;
      }
      this.onError?.(error instanceof Error ? error.message : String(error));
    } finally {
      this.pendingRequests -= 1;
    }
  }

  /** Wait until no debounce timer and no request is outstanding (tests). */
  async settle(): Promise<void> {
    while (this.debounceTimer !== null || this.pendingRequests > 0) {
      await new Promise((resolve) => setTimeout(resolve, 5));
    }
  }
}
