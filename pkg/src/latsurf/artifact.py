"""Manifold artifact: the exported bundle tying a mesh, its graph, the
projection, and reports together. This is the contract between the CLI and
the viewer.

Export is canonical: UTF-8, fixed key order, floats written with 17
significant digits (lossless for binary64), so identical pipelines produce
byte-identical files and import(export(a)) == a exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np

from .geo import GeoPoint, Projection
from .geodesic import PredictorFit, PredictorReport, PredictorRow
from .netgraph import DelayGraph, GraphEdge, VantagePoint

SCHEMA = "latsurf-manifold/1"


class ArtifactValidationError(ValueError):
    """Schema violation; the message carries a JSON-pointer-style path."""


@dataclass
class ManifoldArtifact:
    artifact_id: str
    epsilon_ms: float
    lambda_smooth: float
    metadata: dict                 # config echo, loss history, variant flags
    projection: Projection
    mesh_k: int
    mesh_bounds: tuple
    vertex_xy: np.ndarray          # (n, 2)
    vertex_z: np.ndarray           # (n,) final (post-processed) heights
    vertex_z_raw: np.ndarray       # (n,) optimizer output before post-processing
    faces: np.ndarray              # (F, 3)
    graph: DelayGraph
    reports: dict = field(default_factory=dict)  # e.g. {"predictor": PredictorReport}

    def __eq__(self, other):
        if not isinstance(other, ManifoldArtifact):
            return NotImplemented
        return _artifact_dict(self) == _artifact_dict(other)


# -- canonical JSON -----------------------------------------------------------

def _canon(value) -> str:
    if isinstance(value, dict):
        items = ",".join(f"{json.dumps(k)}:{_canon(v)}" for k, v in value.items())
        return "{" + items + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in value) + "]"
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if not math.isfinite(f):
            raise ArtifactValidationError(f"non-finite float {f} in artifact")
        if f == int(f) and abs(f) < 1e16:
            return f"{f:.1f}"
        return format(f, ".17g")
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    raise TypeError(f"cannot canonicalize {type(value)}")


def canonical_json(value) -> bytes:
    return _canon(value).encode("utf-8")


def _fit_dict(fit: PredictorFit) -> dict:
    return {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared}


def _report_dict(rep: PredictorReport) -> dict:
    return {
        "epsilon_ms": rep.epsilon_ms,
        "tiv_filtered": rep.tiv_filtered,
        "with_intercept": rep.with_intercept,
        "subdivision": rep.subdivision,
        "gcd_fit": _fit_dict(rep.gcd_fit),
        "geodesic_fit": _fit_dict(rep.geodesic_fit),
        "rows": [{
            "pair": list(r.pair),
            "epsilon_first_ms": r.epsilon_first_ms,
            "delta_gcd_ms": r.delta_gcd_ms,
            "delta_geo_ms": r.delta_geo_ms,
            "d_gcd_km": r.d_gcd_km,
            "rtt_ms": r.rtt_ms,
            "geodesic_length": r.geodesic_length,
            "is_edge": r.is_edge,
        } for r in rep.rows],
    }


def _artifact_dict(a: ManifoldArtifact) -> dict:
    xy = a.graph.xy or {}
    doc = {
        "schema": SCHEMA,
        "id": a.artifact_id,
        "epsilon_ms": float(a.epsilon_ms),
        "lambda_smooth": float(a.lambda_smooth),
        "metadata": a.metadata,
        "projection": {
            "kind": a.projection.kind,
            "center_raw": list(a.projection.center_raw),
            "max_dim": a.projection.max_dim,
            "half_extent": list(a.projection.half_extent),
            "margin_fraction": a.projection.margin_fraction,
            "bounds": [list(a.projection.bounds[0]), list(a.projection.bounds[1])],
        },
        "mesh": {
            "k": int(a.mesh_k),
            "bounds": [list(a.mesh_bounds[0]), list(a.mesh_bounds[1])],
            "vertex_xy": [[float(x), float(y)] for x, y in np.asarray(a.vertex_xy)],
            "vertex_z": [float(z) for z in np.asarray(a.vertex_z)],
            "vertex_z_raw": [float(z) for z in np.asarray(a.vertex_z_raw)],
            "faces": [[int(i) for i in tri] for tri in np.asarray(a.faces)],
        },
        "graph": {
            "epsilon_ms": float(a.graph.epsilon_ms),
            "vertices": [{
                "id": v.id, "name": v.name,
                "lat": v.location.lat, "lon": v.location.lon,
                "x": float(xy[v.id][0]), "y": float(xy[v.id][1]),
            } for v in a.graph.vertices],
            "edges": [{
                "u": e.u, "v": e.v,
                "residual_ms": e.residual_ms,
                "ricci": e.ricci,
                "rtt_ms": e.rtt_ms,
                "epsilon_first_ms": e.epsilon_first_ms,
            } for e in a.graph.edges],
        },
        "reports": {name: _report_dict(rep) for name, rep in sorted(a.reports.items())},
    }
    return doc


def export_manifold(artifact: ManifoldArtifact, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(canonical_json(_artifact_dict(artifact)))
    return path


def _expect(cond: bool, pointer: str, message: str):
    if not cond:
        raise ArtifactValidationError(f"at {pointer}: {message}")


def _get(doc: dict, pointer: str, key: str):
    _expect(isinstance(doc, dict), pointer, "expected an object")
    _expect(key in doc, pointer, f"missing key {key!r}")
    return doc[key]


def import_manifold(path) -> ManifoldArtifact:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ArtifactValidationError(f"at /: not valid JSON ({exc})") from exc
    return artifact_from_dict(doc)


def artifact_from_dict(doc: dict) -> ManifoldArtifact:
    _expect(_get(doc, "/", "schema") == SCHEMA, "/schema", f"expected {SCHEMA!r}")
    proj_doc = _get(doc, "/", "projection")
    projection = Projection(
        kind=_get(proj_doc, "/projection", "kind"),
        center_raw=tuple(_get(proj_doc, "/projection", "center_raw")),
        max_dim=float(_get(proj_doc, "/projection", "max_dim")),
        half_extent=tuple(_get(proj_doc, "/projection", "half_extent")),
        margin_fraction=float(_get(proj_doc, "/projection", "margin_fraction")),
    )

    mesh_doc = _get(doc, "/", "mesh")
    vertex_xy = np.array(_get(mesh_doc, "/mesh", "vertex_xy"), dtype=float)
    vertex_z = np.array(_get(mesh_doc, "/mesh", "vertex_z"), dtype=float)
    vertex_z_raw = np.array(_get(mesh_doc, "/mesh", "vertex_z_raw"), dtype=float)
    faces = np.array(_get(mesh_doc, "/mesh", "faces"), dtype=np.int64)
    n = len(vertex_xy)
    _expect(vertex_z.shape == (n,), "/mesh/vertex_z", f"expected {n} heights")
    _expect(vertex_z_raw.shape == (n,), "/mesh/vertex_z_raw", f"expected {n} heights")
    _expect(faces.ndim == 2 and faces.shape[1] == 3, "/mesh/faces",
            "expected triples")
    for fi, tri in enumerate(faces):
        for vi in tri:
            _expect(0 <= vi < n, f"/mesh/faces/{fi}", f"vertex index {vi} out of range")

    bounds = _get(mesh_doc, "/mesh", "bounds")
    (bx0, by0), (bx1, by1) = bounds
    graph_doc = _get(doc, "/", "graph")
    vertices, xy = [], {}
    for i, v in enumerate(_get(graph_doc, "/graph", "vertices")):
        ptr = f"/graph/vertices/{i}"
        vertices.append(VantagePoint(id=_get(v, ptr, "id"), name=_get(v, ptr, "name"),
                                     location=GeoPoint(_get(v, ptr, "lat"),
                                                       _get(v, ptr, "lon"))))
        x, y = float(_get(v, ptr, "x")), float(_get(v, ptr, "y"))
        _expect(bx0 <= x <= bx1 and by0 <= y <= by1, ptr,
                "projected position outside mesh bounds")
        xy[vertices[-1].id] = (x, y)
    ids = {v.id for v in vertices}
    edges = []
    for i, e in enumerate(_get(graph_doc, "/graph", "edges")):
        ptr = f"/graph/edges/{i}"
        u, v = _get(e, ptr, "u"), _get(e, ptr, "v")
        _expect(u in ids and v in ids, ptr, "edge endpoint not among vertices")
        edges.append(GraphEdge(u=u, v=v, residual_ms=float(_get(e, ptr, "residual_ms")),
                               ricci=e.get("ricci"), rtt_ms=e.get("rtt_ms"),
                               epsilon_first_ms=e.get("epsilon_first_ms")))
    graph = DelayGraph(vertices=vertices, edges=edges,
                       epsilon_ms=float(_get(graph_doc, "/graph", "epsilon_ms")),
                       xy=xy)

    reports = {}
    for name, rep in _get(doc, "/", "reports").items():
        ptr = f"/reports/{name}"
        rows = [PredictorRow(pair=tuple(r["pair"]),
                             epsilon_first_ms=r["epsilon_first_ms"],
                             delta_gcd_ms=r["delta_gcd_ms"],
                             delta_geo_ms=r["delta_geo_ms"],
                             d_gcd_km=r["d_gcd_km"], rtt_ms=r["rtt_ms"],
                             geodesic_length=r["geodesic_length"],
                             is_edge=r["is_edge"])
                for r in _get(rep, ptr, "rows")]
        reports[name] = PredictorReport(
            gcd_fit=PredictorFit(**_get(rep, ptr, "gcd_fit")),
            geodesic_fit=PredictorFit(**_get(rep, ptr, "geodesic_fit")),
            rows=rows, tiv_filtered=_get(rep, ptr, "tiv_filtered"),
            with_intercept=_get(rep, ptr, "with_intercept"),
            subdivision=_get(rep, ptr, "subdivision"),
            epsilon_ms=_get(rep, ptr, "epsilon_ms"))

    return ManifoldArtifact(
        artifact_id=_get(doc, "/", "id"),
        epsilon_ms=float(_get(doc, "/", "epsilon_ms")),
        lambda_smooth=float(_get(doc, "/", "lambda_smooth")),
        metadata=_get(doc, "/", "metadata"),
        projection=projection, mesh_k=int(_get(mesh_doc, "/mesh", "k")),
        mesh_bounds=((float(bx0), float(by0)), (float(bx1), float(by1))),
        vertex_xy=vertex_xy, vertex_z=vertex_z, vertex_z_raw=vertex_z_raw,
        faces=faces, graph=graph, reports=reports)


def artifact_to_dict(artifact: ManifoldArtifact) -> dict:
    return _artifact_dict(artifact)
