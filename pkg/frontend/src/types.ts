/** Wire types for the manifold service. These mirror the exported artifact
 * schema exactly; the viewer never derives numbers from them beyond
 * geometry for rendering. */

export interface ManifoldListEntry {
  id: string;
  epsilon_ms: number;
  lambda_smooth: number;
  vertices: number;
  edges: number;
}

export interface GraphVertex {
  id: string;
  name: string;
  lat: number;
  lon: number;
  x: number;
  y: number;
}

export interface GraphEdge {
  u: string;
  v: string;
  residual_ms: number;
  ricci: number | null;
  rtt_ms: number | null;
  epsilon_first_ms: number | null;
}

export interface ManifoldArtifact {
  schema: string;
  id: string;
  epsilon_ms: number;
  lambda_smooth: number;
  metadata: Record<string, unknown>;
  projection: {
    kind: string;
    bounds: [[number, number], [number, number]];
  };
  mesh: {
    k: number;
    bounds: [[number, number], [number, number]];
    vertex_xy: [number, number][];
    vertex_z: number[];
    vertex_z_raw: number[];
    faces: [number, number, number][];
  };
  graph: {
    epsilon_ms: number;
    vertices: GraphVertex[];
    edges: GraphEdge[];
  };
  reports: Record<string, unknown>;
}

export interface GeodesicResponse {
  src: string;
  dst: string;
  length: number;
  subdivision: number;
  polyline: [number, number, number][];
  gcd_km: number;
  fitted_latency_ms?: number;
  fitted_gcd_latency_ms?: number;
  observed_rtt_ms?: number;
  delta_geo_ms?: number;
  delta_gcd_ms?: number;
}
