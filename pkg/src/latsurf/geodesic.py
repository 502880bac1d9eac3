"""Surface geodesics on the optimized mesh and the latency predictors
built on top of them.

Geodesic distances come from a Steiner-augmented graph: the mesh vertices
plus a configurable number of uniformly spaced points per mesh edge, with
every pair of points on a triangle's rim connected by a straight segment
inside that triangle. A label-settling shortest-path search then gives an
upper bound that tightens toward the true polyhedral geodesic as the
subdivision grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .geo import Projection, great_circle_distance, project
from .mesh import HalfEdgeMesh
from .netgraph import DelayGraph, LatencyMatrix, remove_tiv_pairs

Pair = tuple[str, str]


class OutsideDomainError(ValueError):
    pass


class DegenerateRegressionError(ValueError):
    pass


@dataclass
class GeodesicResult:
    length: float
    polyline: np.ndarray  # (m, 3) points on the surface, src first
    subdivision: int


class GeodesicEngine:
    """Reusable Steiner graph over one mesh + height field."""

    def __init__(self, mesh: HalfEdgeMesh, z: Optional[np.ndarray] = None,
                 subdivision: int = 4):
        if subdivision < 0:
            raise ValueError("subdivision must be non-negative")
        self.mesh = mesh
        self.subdivision = int(subdivision)
        v = mesh.vertices3(z)
        n = mesh.n_vertices
        s = self.subdivision

        # Undirected mesh edges; he_edge maps a half-edge to its edge id.
        he_edge = np.full(mesh.n_halfedges, -1, dtype=np.int64)
        edges = []
        for h in range(mesh.n_halfedges):
            t = mesh.he_twin[h]
            if t >= 0 and t < h:
                he_edge[h] = he_edge[t]
                continue
            he_edge[h] = len(edges)
            edges.append((int(mesh.he_src[h]), int(mesh.he_dst[h])))
        self.edge_ends = np.array(edges, dtype=np.int64)
        self.he_edge = he_edge
        n_edges = len(edges)

        # Node layout: mesh vertices, then s Steiner points per edge at
        # fractions j/(s+1) from the edge's first endpoint.
        positions = [v]
        if s > 0:
            ts = (np.arange(1, s + 1) / (s + 1.0))[None, :, None]     # (1, s, 1)
            a = v[self.edge_ends[:, 0]][:, None, :]                   # (E, 1, 3)
            b = v[self.edge_ends[:, 1]][:, None, :]
            positions.append((a + (b - a) * ts).reshape(-1, 3))
        self.positions = np.concatenate(positions, axis=0)
        self.n_nodes = len(self.positions)

        def edge_nodes(e: int) -> np.ndarray:
            """Collinear chain along edge e: endpoint, steiners, endpoint."""
            a, b = self.edge_ends[e]
            inner = n + e * s + np.arange(s) if s > 0 else np.empty(0, dtype=np.int64)
            return np.concatenate([[a], inner, [b]])

        self._edge_nodes = edge_nodes

        rows, cols = [], []
        # Intra-edge: all pairs along the collinear chain (each undirected
        # mesh edge handled exactly once, so no duplicate entries).
        chain_len = s + 2
        iu, ju = np.triu_indices(chain_len, k=1)
        for e in range(n_edges):
            chain = edge_nodes(e)
            rows.append(chain[iu])
            cols.append(chain[ju])
        # Cross-edge within each face: pairs of rim nodes on different edges.
        for f in range(mesh.n_faces):
            hes = [3 * f, 3 * f + 1, 3 * f + 2]
            face_edges = [he_edge[h] for h in hes]
            corners = mesh.faces[f]
            per_edge = [edge_nodes(e)[1:-1] for e in face_edges]  # steiner only
            for j in range(3):
                # Corner j is off the edge spanned by the face's half-edge
                # that starts at slot j+1 (its opposite edge).
                opp_steiner = per_edge[(j + 1) % 3]
                if len(opp_steiner):
                    rows.append(np.full(len(opp_steiner), corners[j]))
                    cols.append(opp_steiner)
            for i in range(3):
                for j in range(i + 1, 3):
                    a, b = per_edge[i], per_edge[j]
                    if len(a) and len(b):
                        rows.append(np.repeat(a, len(b)))
                        cols.append(np.tile(b, len(a)))
        self.base_rows = np.concatenate(rows)
        self.base_cols = np.concatenate(cols)
        self.base_w = np.linalg.norm(self.positions[self.base_rows]
                                     - self.positions[self.base_cols], axis=1)

        (x0, y0), (x1, y1) = mesh.bounds
        self._domain = (x0, y0, x1, y1)
        self._v = v

    # -- point location -------------------------------------------------------

    def locate(self, xy) -> tuple[int, np.ndarray]:
        """Containing face and the 3D surface point for a planar query."""
        x, y = float(xy[0]), float(xy[1])
        x0, y0, x1, y1 = self._domain
        eps = 1e-12
        if not (x0 - eps <= x <= x1 + eps and y0 - eps <= y <= y1 + eps):
            raise OutsideDomainError(f"point ({x}, {y}) outside mesh domain")
        k = self.mesh.k
        dx, dy = self.mesh.grid_spacing()
        c = min(int((x - x0) / dx), k - 2)
        r = min(int((y - y0) / dy), k - 2)
        u = (x - x0) / dx - c
        w = (y - y0) / dy - r
        cell = 2 * (r * (k - 1) + c)
        face = cell if w <= u else cell + 1
        tri = self.mesh.faces[face]
        p = np.array([x, y])
        a, b, cc = self.mesh.xy[tri[0]], self.mesh.xy[tri[1]], self.mesh.xy[tri[2]]
        det = (b[0] - a[0]) * (cc[1] - a[1]) - (cc[0] - a[0]) * (b[1] - a[1])
        l1 = ((p[0] - a[0]) * (cc[1] - a[1]) - (cc[0] - a[0]) * (p[1] - a[1])) / det
        l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det
        l0 = 1.0 - l1 - l2
        z = l0 * self._v[tri[0], 2] + l1 * self._v[tri[1], 2] + l2 * self._v[tri[2], 2]
        return face, np.array([x, y, z])

    def _face_rim_nodes(self, face: int) -> np.ndarray:
        hes = [3 * face, 3 * face + 1, 3 * face + 2]
        parts = [self.mesh.faces[face]]
        for h in hes:
            e = self.he_edge[h]
            chain = self._edge_nodes(e)
            parts.append(chain[1:-1])
        return np.concatenate(parts)

    # -- queries ----------------------------------------------------------

    def _solve(self, extra_points: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Append query points as temporary nodes; Dijkstra from each."""
        faces, pts = [], []
        for xy in extra_points:
            face, p = self.locate(xy)
            faces.append(face)
            pts.append(p)
        pts = np.array(pts).reshape(-1, 3)
        m = len(pts)
        total = self.n_nodes + m
        rows = [self.base_rows]
        cols = [self.base_cols]
        ws = [self.base_w]
        for i, face in enumerate(faces):
            rim = self._face_rim_nodes(face)
            rows.append(np.full(len(rim), self.n_nodes + i))
            cols.append(rim)
            ws.append(np.linalg.norm(self.positions[rim] - pts[i], axis=1))
        for i in range(m):
            for j in range(i + 1, m):
                if faces[i] == faces[j]:
                    rows.append(np.array([self.n_nodes + i]))
                    cols.append(np.array([self.n_nodes + j]))
                    ws.append(np.array([float(np.linalg.norm(pts[i] - pts[j]))]))
        graph = csr_matrix((np.concatenate(ws),
                            (np.concatenate(rows), np.concatenate(cols))),
                           shape=(total, total))
        sources = np.arange(self.n_nodes, total)
        dist, pred = dijkstra(graph, directed=False, indices=sources,
                              return_predecessors=True)
        all_pos = np.vstack([self.positions, pts])
        return dist, pred, all_pos

    def query(self, src_xy, dst_xy) -> GeodesicResult:
        if (float(src_xy[0]), float(src_xy[1])) == (float(dst_xy[0]), float(dst_xy[1])):
            _, p = self.locate(src_xy)
            return GeodesicResult(length=0.0, polyline=p[None, :],
                                  subdivision=self.subdivision)
        dist, pred, all_pos = self._solve([src_xy, dst_xy])
        src_id, dst_id = self.n_nodes, self.n_nodes + 1
        if not np.isfinite(dist[0, dst_id]):
            raise RuntimeError("no surface path between query points")
        chain = [dst_id]
        while chain[-1] != src_id:
            chain.append(int(pred[0, chain[-1]]))
        polyline = all_pos[chain[::-1]]
        length = float(np.sum(np.linalg.norm(np.diff(polyline, axis=0), axis=1)))
        return GeodesicResult(length=length, polyline=polyline,
                              subdivision=self.subdivision)

    def pairwise_lengths(self, points: Sequence) -> np.ndarray:
        """Geodesic length matrix between query points (single graph build,
        one shortest-path sweep per point)."""
        if len(points) == 0:
            return np.zeros((0, 0))
        dist, _, _ = self._solve(points)
        m = len(points)
        out = dist[:, self.n_nodes:self.n_nodes + m]
        return 0.5 * (out + out.T)  # symmetrize tie-breaking float noise


def surface_geodesic(mesh: HalfEdgeMesh, src_xy, dst_xy, subdivision: int = 4,
                     z: Optional[np.ndarray] = None) -> GeodesicResult:
    """One-off geodesic query; build a GeodesicEngine for repeated use."""
    return GeodesicEngine(mesh, z=z, subdivision=subdivision).query(src_xy, dst_xy)


# -- latency predictors --------------------------------------------------


@dataclass
class PredictorFit:
    slope: float
    intercept: float
    r_squared: float

    def predict(self, distance: float) -> float:
        return self.slope * distance + self.intercept


def fit_latency_predictor(pairs: Sequence[tuple[float, float]],
                          with_intercept: bool = False) -> PredictorFit:
    """Least squares latency ~ distance. The default fits a pure scaling
    factor (through the origin); r^2 is 1 - SS_res / SS_tot in either mode."""
    if len(pairs) < 2:
        raise DegenerateRegressionError("need at least two (distance, rtt) pairs")
    d = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    if np.all(d == d[0]):
        raise DegenerateRegressionError("all distances are equal; cannot fit")
    if with_intercept:
        dm, ym = d.mean(), y.mean()
        slope = float(((d - dm) @ (y - ym)) / ((d - dm) @ (d - dm)))
        intercept = float(ym - slope * dm)
    else:
        slope = float((d @ y) / (d @ d))
        intercept = 0.0
    resid = y - (slope * d + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid ** 2).sum())
    # Constant observations carry no variance to explain.
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0
    return PredictorFit(slope=slope, intercept=intercept, r_squared=r2)


@dataclass
class PredictorRow:
    pair: Pair
    epsilon_first_ms: Optional[float]
    delta_gcd_ms: float
    delta_geo_ms: float
    d_gcd_km: float
    rtt_ms: float
    geodesic_length: float
    is_edge: bool


@dataclass
class PredictorReport:
    gcd_fit: PredictorFit
    geodesic_fit: PredictorFit
    rows: list[PredictorRow]
    tiv_filtered: bool
    with_intercept: bool
    subdivision: int
    epsilon_ms: float


@dataclass
class ReportOptions:
    sweep_epsilons: Sequence[float] = field(default_factory=list)
    subdivision: int = 4
    with_intercept: bool = False
    tiv_filter: bool = False
    tiv_slack_ms: float = 0.0
    fit_scope: str = "edges"  # or "all"
    residual_mode: str = "rtt-minus-2gcl"


def predictor_report(matrix: LatencyMatrix, graph: DelayGraph, mesh: HalfEdgeMesh,
                     projection: Projection, options: Optional[ReportOptions] = None
                     ) -> PredictorReport:
    """Per-pair prediction errors for the great-circle and geodesic
    predictors, with the threshold at which each pair first becomes an edge.

    delta = fitted latency - observed minimum RTT. Fits run over the graph's
    edge pairs by default; TIV filtering drops pairs removed by the greedy
    triangle-inequality cleaner before fitting.
    """
    from .netgraph import compute_residual  # local to avoid cycle at import time

    options = options or ReportOptions()
    xy = graph.xy or {v.id: project(v.location, projection) for v in graph.vertices}
    known = {v.id for v in graph.vertices}
    pairs = [p for p in matrix.pairs() if p[0] in known and p[1] in known]
    if not pairs:
        raise ValueError("no measured pairs over the graph's vertices")

    vertex_ids = sorted({v for p in pairs for v in p})
    engine = GeodesicEngine(mesh, subdivision=options.subdivision)
    lengths = engine.pairwise_lengths([xy[v] for v in vertex_ids])
    geo_len = {}
    for i, a in enumerate(vertex_ids):
        for j in range(i + 1, len(vertex_ids)):
            geo_len[(a, vertex_ids[j])] = float(lengths[i, j])

    gcd_km = {p: great_circle_distance(matrix.point(p[0]).location,
                                       matrix.point(p[1]).location) for p in pairs}

    edge_pairs = graph.edge_set()
    fit_pairs = [p for p in pairs if p in edge_pairs] if options.fit_scope == "edges" else list(pairs)
    if options.tiv_filter:
        cleaned = remove_tiv_pairs(matrix, options.tiv_slack_ms)
        fit_pairs = [p for p in fit_pairs if p in cleaned.rtt_min_ms]
    if len(fit_pairs) < 2:
        raise DegenerateRegressionError("fewer than two pairs available for fitting")

    gcd_fit = fit_latency_predictor([(gcd_km[p], matrix.rtt(*p)) for p in fit_pairs],
                                    options.with_intercept)
    geo_fit = fit_latency_predictor([(geo_len[p], matrix.rtt(*p)) for p in fit_pairs],
                                    options.with_intercept)

    sweep = sorted(options.sweep_epsilons)
    rows = []
    for p in pairs:
        residual = compute_residual(matrix, p, options.residual_mode)
        eps_first = next((e for e in sweep if residual <= e), None)
        rtt = matrix.rtt(*p)
        rows.append(PredictorRow(
            pair=p, epsilon_first_ms=eps_first,
            delta_gcd_ms=gcd_fit.predict(gcd_km[p]) - rtt,
            delta_geo_ms=geo_fit.predict(geo_len[p]) - rtt,
            d_gcd_km=gcd_km[p], rtt_ms=rtt, geodesic_length=geo_len[p],
            is_edge=p in edge_pairs))
    rows.sort(key=lambda r: (r.epsilon_first_ms if r.epsilon_first_ms is not None
                             else math.inf, r.pair))
    return PredictorReport(gcd_fit=gcd_fit, geodesic_fit=geo_fit, rows=rows,
                           tiv_filtered=options.tiv_filter,
                           with_intercept=options.with_intercept,
                           subdivision=options.subdivision,
                           epsilon_ms=graph.epsilon_ms)


@dataclass
class StabilityRow:
    pair: Pair
    min_ms: float
    max_ms: float

    @property
    def range_ms(self) -> float:
        return self.max_ms - self.min_ms


@dataclass
class StabilityReport:
    rows: list[StabilityRow]
    n_snapshots: int
    epsilon_ms: float
    lambda_smooth: float


def stability_report(snapshots: Sequence[LatencyMatrix], config) -> StabilityReport:
    """Run the full pipeline per snapshot and track the fitted geodesic
    latency of every pair across snapshots. Uses the first sweep point of
    the config; vantage-point sets must match across snapshots."""
    from .pipeline import run_pipeline_on_matrix  # deferred: pipeline imports us

    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots")
    base_ids = set(snapshots[0].ids())
    for i, snap in enumerate(snapshots[1:], start=2):
        if set(snap.ids()) != base_ids:
            raise ValueError(f"snapshot {i} has a different vantage-point set")

    fitted: dict[Pair, list[float]] = {}
    eps = lam = None
    for snap in snapshots:
        artifacts = run_pipeline_on_matrix(snap, config)
        artifact = artifacts[0]
        eps = artifact.epsilon_ms
        lam = artifact.lambda_smooth
        report = artifact.reports["predictor"]
        for row in report.rows:
            pred = report.geodesic_fit.predict(row.geodesic_length)
            fitted.setdefault(row.pair, []).append(pred)

    rows = [StabilityRow(pair=p, min_ms=min(vals), max_ms=max(vals))
            for p, vals in sorted(fitted.items())]
    return StabilityReport(rows=rows, n_snapshots=len(snapshots),
                           epsilon_ms=eps, lambda_smooth=lam)
