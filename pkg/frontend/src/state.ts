import { GeodesicResponse, ManifoldListEntry } from "./types";

/** Camera pose for the orbit rig. */
export interface CameraPose {
  azimuthDeg: number;
  elevationDeg: number;
  distance: number;
  target: [number, number, number];
}

export const OVERHEAD_POSE: CameraPose = {
  azimuthDeg: 0,
  elevationDeg: 89,
  distance: 1.6,
  target: [0.5, 0.5, 0],
};

export const OBLIQUE_POSE: CameraPose = {
  azimuthDeg: -35,
  elevationDeg: 38,
  distance: 1.5,
  target: [0.5, 0.5, 0],
};

export interface SceneState {
  sweep: ManifoldListEntry[];
  /** Index into the sweep; the threshold slider position. */
  sliderIndex: number;
  activeArtifactId: string | null;
  selected: string[]; // 0..2 vertex ids
  geodesic: GeodesicResponse | null;
  heightExaggeration: number;
  camera: CameraPose;
  notice: string | null;
  error: string | null;
}

export function initialState(sweep: ManifoldListEntry[]): SceneState {
  return {
    sweep,
    sliderIndex: 0,
    activeArtifactId: sweep.length ? sweep[0].id : null,
    selected: [],
    geodesic: null,
    heightExaggeration: 1.0,
    camera: { ...OBLIQUE_POSE },
    notice: null,
    error: null,
  };
}

/** Move the threshold slider. Camera and selection survive the switch; the
 * selection is cleared with a notice when a vertex no longer exists in the
 * new artifact (the caller knows the new artifact's vertex ids). */
export function switchThreshold(
  state: SceneState,
  sliderIndex: number,
  newArtifactVertexIds: Set<string>,
): SceneState {
  const clamped = Math.max(0, Math.min(state.sweep.length - 1, sliderIndex));
  const entry = state.sweep[clamped];
  const missing = state.selected.filter((v) => !newArtifactVertexIds.has(v));
  const keepSelection = missing.length === 0;
  return {
    ...state,
    sliderIndex: clamped,
    activeArtifactId: entry ? entry.id : null,
    selected: keepSelection ? state.selected : [],
    geodesic: null, // always requeried against the new artifact
    notice: keepSelection
      ? null
      : `selection cleared: ${missing.join(", ")} not present at this threshold`,
  };
}

/** Toggle vertex selection; at most two distinct vertices. */
export function selectVertex(state: SceneState, vertexId: string): SceneState {
  if (state.selected.includes(vertexId)) {
    return {
      ...state,
      selected: state.selected.filter((v) => v !== vertexId),
      geodesic: null,
    };
  }
  const selected =
    state.selected.length < 2 ? [...state.selected, vertexId] : [state.selected[1], vertexId];
  return { ...state, selected, geodesic: null };
}

export function canQueryGeodesic(state: SceneState): boolean {
  return state.selected.length === 2 && state.selected[0] !== state.selected[1];
}

export function applyGeodesic(state: SceneState, response: GeodesicResponse): SceneState {
  return { ...state, geodesic: response, error: null };
}

export function setExaggeration(state: SceneState, factor: number): SceneState {
  if (!(factor >= 0.1 && factor <= 10)) {
    return state;
  }
  return { ...state, heightExaggeration: factor };
}

export function setError(state: SceneState, message: string): SceneState {
  return { ...state, error: message };
}

/** Orbit the camera by pointer deltas; elevation stays off the poles and
 * the distance inside a sane bracket. */
export function orbitCamera(
  state: SceneState,
  dAzimuthDeg: number,
  dElevationDeg: number,
  zoomFactor = 1.0,
): SceneState {
  const camera = state.camera;
  return {
    ...state,
    camera: {
      ...camera,
      azimuthDeg: camera.azimuthDeg + dAzimuthDeg,
      elevationDeg: Math.max(5, Math.min(89, camera.elevationDeg + dElevationDeg)),
      distance: Math.max(0.2, Math.min(8, camera.distance * zoomFactor)),
    },
  };
}

/** Pan the orbit target in the ground plane. */
export function panCamera(state: SceneState, dx: number, dy: number): SceneState {
  const [tx, ty, tz] = state.camera.target;
  return { ...state, camera: { ...state.camera, target: [tx + dx, ty + dy, tz] } };
}
