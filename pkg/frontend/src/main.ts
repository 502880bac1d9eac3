import { ManifoldClient, ServiceError } from "./api";
import { geodesicReadouts } from "./readouts";
import { buildSceneModel } from "./scene-model";
import { ManifoldScene } from "./scene";
import {
  OBLIQUE_POSE,
  OVERHEAD_POSE,
  SceneState,
  applyGeodesic,
  canQueryGeodesic,
  initialState,
  orbitCamera,
  panCamera,
  selectVertex,
  setError,
  setExaggeration,
  switchThreshold,
} from "./state";
import { ManifoldArtifact } from "./types";

const client = new ManifoldClient("");

let state: SceneState;
let artifact: ManifoldArtifact | null = null;
const artifactCache = new Map<string, ManifoldArtifact>();

const canvas = document.getElementById("view") as HTMLCanvasElement;
const scene = new ManifoldScene(canvas);
const slider = document.getElementById("threshold") as HTMLInputElement;
const sliderLabel = document.getElementById("threshold-label") as HTMLElement;
const exaggeration = document.getElementById("exaggeration") as HTMLInputElement;
const exaggerationLabel = document.getElementById("exaggeration-label") as HTMLElement;
const readoutBox = document.getElementById("readouts") as HTMLElement;
const noticeBox = document.getElementById("notice") as HTMLElement;
const errorBox = document.getElementById("error") as HTMLElement;
const selectionBox = document.getElementById("selection") as HTMLElement;

async function loadArtifact(id: string): Promise<ManifoldArtifact> {
  const cached = artifactCache.get(id);
  if (cached) return cached;
  const loaded = await client.getManifold(id);
  artifactCache.set(id, loaded);
  return loaded;
}

function redraw() {
  if (!artifact) return;
  scene.update(buildSceneModel(artifact, state.heightExaggeration, state.selected, state.geodesic));
  scene.applyCamera(state.camera);
  scene.render();
  renderPanel();
}

function renderPanel() {
  const entry = state.sweep[state.sliderIndex];
  sliderLabel.textContent = entry
    ? `eps = ${entry.epsilon_ms} ms, lambda = ${entry.lambda_smooth}`
    : "-";
  exaggerationLabel.textContent = `x${state.heightExaggeration}`;
  selectionBox.textContent = state.selected.length
    ? `selected: ${state.selected.join(" , ")}`
    : "select two vantage points";
  noticeBox.textContent = state.notice ?? "";
  errorBox.textContent = state.error ?? "";
  errorBox.style.display = state.error ? "block" : "none";

  readoutBox.innerHTML = "";
  if (state.geodesic) {
    for (const row of geodesicReadouts(state.geodesic)) {
      const div = document.createElement("div");
      div.className = "readout";
      const label = document.createElement("span");
      label.textContent = `${row.label}: `;
      const value = document.createElement("strong");
      value.textContent = row.text; // verbatim service value
      const unit = document.createElement("span");
      unit.textContent = ` ${row.unit}`;
      div.append(label, value, unit);
      readoutBox.append(div);
    }
  }
}

async function maybeQueryGeodesic() {
  if (!canQueryGeodesic(state) || !state.activeArtifactId) return;
  const [src, dst] = state.selected;
  const requestedFor = `${state.activeArtifactId}:${src}:${dst}`;
  try {
    const response = await client.getGeodesic(state.activeArtifactId, src, dst);
    // Latest query wins; drop stale responses.
    const current = `${state.activeArtifactId}:${state.selected[0]}:${state.selected[1]}`;
    if (current !== requestedFor) return;
    state = applyGeodesic(state, response);
  } catch (err) {
    state = setError(state, err instanceof ServiceError ? err.message : String(err));
  }
  redraw();
}

async function onSlider(index: number) {
  if (!state.sweep[index]) return;
  try {
    const next = await loadArtifact(state.sweep[index].id);
    state = switchThreshold(state, index, new Set(next.graph.vertices.map((v) => v.id)));
    artifact = next;
    redraw();
    await maybeQueryGeodesic();
  } catch (err) {
    state = setError(state, String(err));
    renderPanel();
  }
}

// Pointer: click picks markers; drag orbits (shift-drag pans); wheel zooms.
let dragging = false;
let dragMoved = false;
let lastPointer: [number, number] = [0, 0];

canvas.addEventListener("pointerdown", (event) => {
  dragging = true;
  dragMoved = false;
  lastPointer = [event.clientX, event.clientY];
  canvas.setPointerCapture(event.pointerId);
});

canvas.addEventListener("pointermove", (event) => {
  if (!dragging) return;
  const dx = event.clientX - lastPointer[0];
  const dy = event.clientY - lastPointer[1];
  if (Math.abs(dx) + Math.abs(dy) < 2) return;
  dragMoved = true;
  lastPointer = [event.clientX, event.clientY];
  if (event.shiftKey) {
    const scale = state.camera.distance * 0.0012;
    state = panCamera(state, -dx * scale, dy * scale);
  } else {
    state = orbitCamera(state, -dx * 0.4, dy * 0.3);
  }
  redraw();
});

canvas.addEventListener("pointerup", async (event) => {
  dragging = false;
  canvas.releasePointerCapture(event.pointerId);
  if (dragMoved) return;
  const vertexId = scene.pick(event.clientX, event.clientY);
  if (!vertexId) return;
  state = selectVertex(state, vertexId);
  redraw();
  await maybeQueryGeodesic();
});

canvas.addEventListener("wheel", (event) => {
  event.preventDefault();
  state = orbitCamera(state, 0, 0, event.deltaY > 0 ? 1.1 : 1 / 1.1);
  redraw();
});

slider.addEventListener("input", () => void onSlider(Number(slider.value)));
exaggeration.addEventListener("input", () => {
  state = setExaggeration(state, Number(exaggeration.value));
  redraw();
});

document.getElementById("pose-overhead")!.addEventListener("click", () => {
  state = { ...state, camera: { ...OVERHEAD_POSE } };
  redraw();
});
document.getElementById("pose-oblique")!.addEventListener("click", () => {
  state = { ...state, camera: { ...OBLIQUE_POSE } };
  redraw();
});

async function boot() {
  try {
    const sweep = await client.listManifolds();
    state = initialState(sweep);
    slider.max = String(Math.max(0, sweep.length - 1));
    slider.value = "0";
    if (!sweep.length) {
      state = setError(state, "service lists no manifolds");
      renderPanel();
      return;
    }
    artifact = await loadArtifact(sweep[0].id);
    // Center the orbit target on the mesh domain.
    const [[x0, y0], [x1, y1]] = artifact.mesh.bounds;
    const target: [number, number, number] = [(x0 + x1) / 2, (y0 + y1) / 2, 0];
    state = { ...state, camera: { ...state.camera, target } };
    redraw();
  } catch (err) {
    errorBox.textContent = `failed to load manifolds: ${err}`;
    errorBox.style.display = "block";
  }
}

void boot();
