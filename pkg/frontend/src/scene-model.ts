import { GeodesicResponse, ManifoldArtifact } from "./types";

/** Pure description of everything the renderer draws. Building it is a
 * pure function of (artifact, exaggeration, selection, geodesic), so the
 * same state always yields the same buffers. Heights are scaled for
 * display only; readouts never come from here. */
export interface SceneModel {
  surface: {
    positions: Float32Array; // n x 3
    indices: Uint32Array; // F x 3
  };
  basePlane: {
    bounds: [[number, number], [number, number]];
  };
  edges: EdgeSegment[];
  markers: Marker[];
  geodesicPolyline: Float32Array | null; // m x 3, exaggerated like the surface
  exaggeration: number;
}

export interface EdgeSegment {
  u: string;
  v: string;
  /** Endpoints on the (exaggerated) surface. */
  a: [number, number, number];
  b: [number, number, number];
  ricci: number | null;
  /** Positive curvature renders blue, negative red; magnitude in [0, 1]
   * modulates saturation. */
  colorClass: "positive" | "negative" | "neutral";
  magnitude: number;
}

export interface Marker {
  id: string;
  name: string;
  position: [number, number, number];
  selected: boolean;
}

function surfaceHeightAt(artifact: ManifoldArtifact, x: number, y: number): number {
  // Barycentric interpolation over the containing grid triangle; geometry
  // placement only (never displayed as a number).
  const [[x0, y0], [x1, y1]] = artifact.mesh.bounds;
  const k = artifact.mesh.k;
  const dx = (x1 - x0) / (k - 1);
  const dy = (y1 - y0) / (k - 1);
  const c = Math.min(Math.floor((x - x0) / dx), k - 2);
  const r = Math.min(Math.floor((y - y0) / dy), k - 2);
  const u = (x - x0) / dx - c;
  const w = (y - y0) / dy - r;
  const z = artifact.mesh.vertex_z;
  const a = r * k + c;
  const b = r * k + c + 1;
  const cc = (r + 1) * k + c;
  const d = (r + 1) * k + c + 1;
  if (w <= u) {
    // lower triangle (a, b, d)
    return z[a] * (1 - u) + z[b] * (u - w) + z[d] * w;
  }
  // upper triangle (a, d, cc)
  return z[a] * (1 - w) + z[d] * u + z[cc] * (w - u);
}

export function buildSceneModel(
  artifact: ManifoldArtifact,
  exaggeration: number,
  selected: string[],
  geodesic: GeodesicResponse | null,
): SceneModel {
  const n = artifact.mesh.vertex_xy.length;
  const positions = new Float32Array(n * 3);
  for (let i = 0; i < n; i++) {
    positions[3 * i] = artifact.mesh.vertex_xy[i][0];
    positions[3 * i + 1] = artifact.mesh.vertex_xy[i][1];
    positions[3 * i + 2] = artifact.mesh.vertex_z[i] * exaggeration;
  }
  const indices = new Uint32Array(artifact.mesh.faces.length * 3);
  artifact.mesh.faces.forEach((tri, f) => {
    indices[3 * f] = tri[0];
    indices[3 * f + 1] = tri[1];
    indices[3 * f + 2] = tri[2];
  });

  const vertexById = new Map(artifact.graph.vertices.map((v) => [v.id, v]));
  const edges: EdgeSegment[] = artifact.graph.edges.map((e) => {
    const pu = vertexById.get(e.u)!;
    const pv = vertexById.get(e.v)!;
    const za = surfaceHeightAt(artifact, pu.x, pu.y) * exaggeration;
    const zb = surfaceHeightAt(artifact, pv.x, pv.y) * exaggeration;
    const ricci = e.ricci;
    const colorClass =
      ricci == null || ricci === 0 ? "neutral" : ricci > 0 ? "positive" : "negative";
    const magnitude = ricci == null ? 0 : Math.min(1, Math.abs(ricci) / 2);
    return {
      u: e.u,
      v: e.v,
      a: [pu.x, pu.y, za] as [number, number, number],
      b: [pv.x, pv.y, zb] as [number, number, number],
      ricci,
      colorClass,
      magnitude,
    };
  });

  const markers: Marker[] = artifact.graph.vertices.map((v) => ({
    id: v.id,
    name: v.name,
    position: [v.x, v.y, surfaceHeightAt(artifact, v.x, v.y) * exaggeration],
    selected: selected.includes(v.id),
  }));

  let polyline: Float32Array | null = null;
  if (geodesic) {
    polyline = new Float32Array(geodesic.polyline.length * 3);
    geodesic.polyline.forEach(([x, y, z], i) => {
      polyline![3 * i] = x;
      polyline![3 * i + 1] = y;
      polyline![3 * i + 2] = z * exaggeration;
    });
  }

  return {
    surface: { positions, indices },
    basePlane: { bounds: artifact.mesh.bounds },
    edges,
    markers,
    geodesicPolyline: polyline,
    exaggeration,
  };
}
