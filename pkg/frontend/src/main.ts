/**
 * DOM wiring: connects the controls to the controller and the canvas to
 * the renderer. All interaction logic lives in controller.ts; this file
 * only translates DOM events and paints readouts.
 */

import { ApiClient, DatasetRecord } from "./api.js";
import { ViewerController } from "./controller.js";
import { WebGLMeshRenderer } from "./renderer.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

const api = new ApiClient("");
const canvas = el<HTMLCanvasElement>("scene");
const renderer = new WebGLMeshRenderer(canvas);

const datasetSelect = el<HTMLSelectElement>("dataset-select");
const uploadInput = el<HTMLInputElement>("upload-input");
const algorithmInputs = Array.from(
  document.querySelectorAll<HTMLInputElement>("input[name=algorithm]"),
);
const isoSlider = el<HTMLInputElement>("iso-slider");
const isoValue = el<HTMLSpanElement>("iso-value");
const medianToggle = el<HTMLInputElement>("median-toggle");
const medianRadius = el<HTMLInputElement>("median-radius");
const gaussianToggle = el<HTMLInputElement>("gaussian-toggle");
const gaussianSigma = el<HTMLInputElement>("gaussian-sigma");
const delaunayControls = el<HTMLDivElement>("delaunay-controls");
const axisSelect = el<HTMLSelectElement>("axis-select");
const sliceStep = el<HTMLInputElement>("slice-step");
const maxEdge = el<HTMLInputElement>("max-edge");
const statsReadout = el<HTMLDivElement>("stats");
const banner = el<HTMLDivElement>("banner");

const controller = new ViewerController({
  api,
  renderer,
  onRendered: (update) => {
    banner.hidden = true;
    statsReadout.textContent =
      `${update.stats.vertexCount} vertices · ` +
      `${update.stats.triangleCount} triangles · ` +
      `${update.stats.computeMs.toFixed(1)} ms · ` +
      `iso ${update.params.iso.toFixed(3)}`;
  },
  onError: (message) => {
    banner.textContent = message;
    banner.hidden = false;
  },
});

function syncIsoSlider(): void {
  const [lo, hi] = controller.isoRange;
  isoSlider.min = String(lo);
  isoSlider.max = String(hi);
  isoSlider.step = String((hi - lo) / 200 || 0.001);
  isoSlider.value = String(controller.state.iso);
  isoValue.textContent = controller.state.iso.toFixed(3);
}

function syncAlgorithmControls(): void {
  delaunayControls.hidden = controller.state.algorithm !== "delaunay";
}

let records: DatasetRecord[] = [];

function renderDatasetOptions(): void {
  datasetSelect.innerHTML = "";
  const placeholder = document.createElement("option");
  placeholder.value = "";
  placeholder.textContent = records.length ? "select a dataset" : "no datasets uploaded";
  datasetSelect.appendChild(placeholder);
  for (const record of records) {
    const option = document.createElement("option");
    option.value = record.id;
    const [nx, ny, nz] = record.dims;
    option.textContent = `${record.name} (${nx}×${ny}×${nz})`;
    datasetSelect.appendChild(option);
  }
}

async function reloadDatasets(selectId?: string): Promise<void> {
  try {
    records = await api.listDatasets();
  } catch (error) {
    banner.textContent = error instanceof Error ? error.message : String(error);
    banner.hidden = false;
    return;
  }
  renderDatasetOptions();
  if (selectId) {
    datasetSelect.value = selectId;
    const record = records.find((r) => r.id === selectId);
    if (record) {
      controller.selectDataset(record);
      syncIsoSlider();
    }
  }
}

datasetSelect.addEventListener("change", () => {
  const record = records.find((r) => r.id === datasetSelect.value);
  if (record) {
    controller.selectDataset(record);
    syncIsoSlider();
  }
});

uploadInput.addEventListener("change", async () => {
  const file = uploadInput.files?.[0];
  if (!file) {
    return;
  }
  try {
    const record = await api.uploadDataset(file, file.name.replace(/\.mha$/i, ""));
    await reloadDatasets(record.id);
  } catch (error) {
    banner.textContent = error instanceof Error ? error.message : String(error);
    banner.hidden = false;
  } finally {
    uploadInput.value = "";
  }
});

for (const input of algorithmInputs) {
  input.addEventListener("change", () => {
    if (input.checked) {
      controller.setAlgorithm(input.value === "delaunay" ? "delaunay" : "mc");
      syncAlgorithmControls();
    }
  });
}

isoSlider.addEventListener("input", () => {
  controller.setIso(Number(isoSlider.value));
  isoValue.textContent = controller.state.iso.toFixed(3);
});

medianToggle.addEventListener("change", () => {
  controller.setMedianRadius(Number(medianRadius.value));
  controller.setMedianEnabled(medianToggle.checked);
});
medianRadius.addEventListener("change", () => {
  controller.setMedianRadius(Number(medianRadius.value));
});
gaussianToggle.addEventListener("change", () => {
  controller.setGaussianSigma(Number(gaussianSigma.value));
  controller.setGaussianEnabled(gaussianToggle.checked);
});
gaussianSigma.addEventListener("change", () => {
  controller.setGaussianSigma(Number(gaussianSigma.value));
});

axisSelect.addEventListener("change", () => {
  controller.setAxis(axisSelect.value as "x" | "y" | "z");
});
sliceStep.addEventListener("change", () => {
  controller.setSliceStep(Number(sliceStep.value));
});
maxEdge.addEventListener("change", () => {
  controller.setMaxEdge(Number(maxEdge.value));
});

syncAlgorithmControls();
syncIsoSlider();
void reloadDatasets();
