"""Read-only HTTP service over a directory of exported manifold artifacts.

Endpoints:
  GET /manifolds
      Sweep listing with threshold/smoothing metadata, sorted by epsilon.
  GET /manifold/{id}
      The artifact's canonical JSON, byte-for-byte as exported.
  GET /manifold/{id}/geodesic?src=...&dst=...&s=4
      Surface geodesic between two graph vertices plus fitted latency and
      prediction deltas; everything a viewer needs to display readouts
      without doing its own math.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .artifact import ManifoldArtifact, import_manifold
from .geo import great_circle_distance
from .geodesic import GeodesicEngine
from .mesh import HalfEdgeMesh

logger = logging.getLogger(__name__)


class ArtifactStore:
    def __init__(self, directory):
        self.directory = Path(directory)
        paths = sorted(self.directory.glob("*.json"))
        self.artifacts: dict[str, ManifoldArtifact] = {}
        self.raw: dict[str, bytes] = {}
        for p in paths:
            try:
                artifact = import_manifold(p)
            except Exception as exc:
                logger.warning("skipping %s: %s", p.name, exc)
                continue
            self.artifacts[artifact.artifact_id] = artifact
            self.raw[artifact.artifact_id] = p.read_bytes()
        if not self.artifacts:
            raise FileNotFoundError(f"no loadable artifacts in {self.directory}")
        self._engines: dict[tuple[str, int], GeodesicEngine] = {}

    def listing(self) -> list[dict]:
        entries = [{"id": a.artifact_id, "epsilon_ms": a.epsilon_ms,
                    "lambda_smooth": a.lambda_smooth,
                    "vertices": len(a.graph.vertices),
                    "edges": len(a.graph.edges)}
                   for a in self.artifacts.values()]
        entries.sort(key=lambda e: (e["epsilon_ms"], e["lambda_smooth"], e["id"]))
        return entries

    def engine(self, artifact_id: str, subdivision: int) -> GeodesicEngine:
        key = (artifact_id, subdivision)
        if key not in self._engines:
            a = self.artifacts[artifact_id]
            mesh = HalfEdgeMesh(k=a.mesh_k, bounds=a.mesh_bounds, xy=a.vertex_xy,
                                z=a.vertex_z, faces=a.faces)
            self._engines[key] = GeodesicEngine(mesh, subdivision=subdivision)
        return self._engines[key]


def create_app(directory, viewer_dist: Optional[str] = None) -> FastAPI:
    store = ArtifactStore(directory)
    app = FastAPI(title="latsurf manifold service")

    @app.get("/manifolds")
    def manifolds():
        return store.listing()

    @app.get("/manifold/{artifact_id}")
    def manifold(artifact_id: str):
        raw = store.raw.get(artifact_id)
        if raw is None:
            return JSONResponse({"error": f"unknown artifact {artifact_id!r}"},
                                status_code=404)
        return Response(content=raw, media_type="application/json")

    @app.get("/manifold/{artifact_id}/geodesic")
    def geodesic(artifact_id: str, src: Optional[str] = None,
                 dst: Optional[str] = None, s: str = "4"):
        artifact = store.artifacts.get(artifact_id)
        if artifact is None:
            return JSONResponse({"error": f"unknown artifact {artifact_id!r}"},
                                status_code=404)
        if not src or not dst:
            return JSONResponse({"error": "src and dst query parameters required"},
                                status_code=400)
        try:
            subdivision = int(s)
            if subdivision < 0:
                raise ValueError
        except ValueError:
            return JSONResponse({"error": f"malformed subdivision {s!r}"},
                                status_code=400)
        xy = artifact.graph.xy or {}
        for vertex in (src, dst):
            if vertex not in xy:
                return JSONResponse({"error": f"unknown vertex {vertex!r}"},
                                    status_code=404)

        engine = store.engine(artifact_id, subdivision)
        result = engine.query(xy[src], xy[dst])

        doc = {
            "src": src, "dst": dst,
            "length": result.length,
            "subdivision": result.subdivision,
            "polyline": [[float(x), float(y), float(z)] for x, y, z in result.polyline],
        }
        locations = {v.id: v.location for v in artifact.graph.vertices}
        gcd_km = great_circle_distance(locations[src], locations[dst])
        doc["gcd_km"] = gcd_km
        report = artifact.reports.get("predictor")
        if report is not None:
            fitted_geo = report.geodesic_fit.predict(result.length)
            fitted_gcd = report.gcd_fit.predict(gcd_km)
            doc["fitted_latency_ms"] = fitted_geo
            doc["fitted_gcd_latency_ms"] = fitted_gcd
            pair = (src, dst) if src <= dst else (dst, src)
            row = next((r for r in report.rows if r.pair == pair), None)
            if row is not None:
                doc["observed_rtt_ms"] = row.rtt_ms
                doc["delta_geo_ms"] = fitted_geo - row.rtt_ms
                doc["delta_gcd_ms"] = fitted_gcd - row.rtt_ms
        return doc

    if viewer_dist and Path(viewer_dist).is_dir():
        app.mount("/", StaticFiles(directory=viewer_dist, html=True), name="viewer")
    return app


def serve(directory, port: int = 8787, viewer_dist: Optional[str] = None):
    import uvicorn

    app = create_app(directory, viewer_dist=viewer_dist)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="info")
