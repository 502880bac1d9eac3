"""Measurement ingestion, residual computation, epsilon-thresholding,
single-linkage clustering, and triangle-inequality-violation handling."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

from .geo import GeoPoint, great_circle_distance, great_circle_latency

logger = logging.getLogger(__name__)

RESIDUAL_MODES = ("rtt-minus-2gcl", "half-rtt-minus-gcl")
DEFAULT_RESIDUAL_MODE = "rtt-minus-2gcl"

Pair = tuple[str, str]


class MeasurementParseError(ValueError):
    """Malformed measurement input; message carries line/field context."""


class MissingPairError(KeyError):
    pass


def _pair(a: str, b: str) -> Pair:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class VantagePoint:
    id: str
    name: str
    location: GeoPoint


@dataclass
class LatencyMatrix:
    """Geo-located vantage points plus minimum-RTT measurements between them.

    Directional duplicates are collapsed by minimum; missing pairs are
    allowed. All stored RTTs are positive.
    """

    points: list[VantagePoint]
    rtt_min_ms: dict[Pair, float] = field(default_factory=dict)

    def __post_init__(self):
        ids = [p.id for p in self.points]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise MeasurementParseError(f"duplicate vantage-point id(s): {dup}")

    def point(self, vp_id: str) -> VantagePoint:
        try:
            return self._index[vp_id]
        except AttributeError:
            object.__setattr__(self, "_index", {p.id: p for p in self.points})
            return self._index[vp_id]

    def ids(self) -> list[str]:
        return [p.id for p in self.points]

    def rtt(self, a: str, b: str) -> float:
        try:
            return self.rtt_min_ms[_pair(a, b)]
        except KeyError:
            raise MissingPairError(f"no measurement for pair ({a}, {b})")

    def has_pair(self, a: str, b: str) -> bool:
        return _pair(a, b) in self.rtt_min_ms

    def pairs(self) -> list[Pair]:
        return sorted(self.rtt_min_ms)

    def add_measurement(self, src: str, dst: str, rtt_ms: float):
        if src == dst:
            raise MeasurementParseError(f"self-measurement for id {src!r}")
        key = _pair(src, dst)
        prev = self.rtt_min_ms.get(key)
        self.rtt_min_ms[key] = rtt_ms if prev is None else min(prev, rtt_ms)


@dataclass
class GraphEdge:
    u: str
    v: str
    residual_ms: float
    ricci: Optional[float] = None
    rtt_ms: Optional[float] = None
    epsilon_first_ms: Optional[float] = None


@dataclass
class DelayGraph:
    """Thresholded simple graph; per-edge residuals, optional Ricci weights,
    and optional projected vertex positions (set by the pipeline)."""

    vertices: list[VantagePoint]
    edges: list[GraphEdge]
    epsilon_ms: float
    xy: Optional[dict[str, tuple[float, float]]] = None

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {p.id: set() for p in self.vertices}
        for e in self.edges:
            adj[e.u].add(e.v)
            adj[e.v].add(e.u)
        return adj

    def connected_components(self) -> list[list[str]]:
        adj = self.adjacency()
        seen: set[str] = set()
        comps = []
        for root in sorted(adj):
            if root in seen:
                continue
            comp, stack = [], [root]
            seen.add(root)
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in sorted(adj[u]):
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def edge_set(self) -> set[Pair]:
        return {_pair(e.u, e.v) for e in self.edges}


class ClampCounter:
    """Counts residuals clamped to zero (measurement noise below the
    physical great-circle bound)."""

    def __init__(self):
        self.count = 0

    def bump(self):
        self.count += 1


def load_measurements(source: IO, fmt: str = "json",
                      vantage_points: Optional[IO] = None) -> LatencyMatrix:
    """Parse a measurement stream into a LatencyMatrix.

    JSON schema: {"vantage_points": [{"id", "name", "lat", "lon"}],
                  "measurements": [{"src", "dst", "rtt_ms"}]}
    CSV: rows of src,dst,rtt_ms with a separate vantage_points stream of
    id,name,lat,lon.
    """
    if fmt == "json":
        return _load_json(source)
    if fmt == "csv":
        if vantage_points is None:
            raise MeasurementParseError("csv format needs a vantage_points stream")
        return _load_csv(source, vantage_points)
    raise MeasurementParseError(f"unknown measurement format {fmt!r}")


def _decode(stream: IO) -> IO:
    if isinstance(stream, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(stream, "mode", ""):
        return io.TextIOWrapper(stream, encoding="utf-8")
    return stream


def _build_matrix(points: list[VantagePoint], rows: Iterable[tuple[str, str, float, str]]) -> LatencyMatrix:
    matrix = LatencyMatrix(points=points)
    known = set(matrix.ids())
    for src, dst, rtt, where in rows:
        for vp_id in (src, dst):
            if vp_id not in known:
                raise MeasurementParseError(f"{where}: unknown vantage-point id {vp_id!r}")
        if not rtt > 0.0:
            raise MeasurementParseError(f"{where}: non-positive rtt_ms {rtt}")
        matrix.add_measurement(src, dst, rtt)
    return matrix


def _load_json(source: IO) -> LatencyMatrix:
    try:
        doc = json.load(_decode(source))
    except json.JSONDecodeError as exc:
        raise MeasurementParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MeasurementParseError("top-level JSON value must be an object")
    points = []
    for i, vp in enumerate(doc.get("vantage_points", [])):
        where = f"vantage_points[{i}]"
        try:
            points.append(VantagePoint(
                id=str(vp["id"]), name=str(vp.get("name", vp["id"])),
                location=GeoPoint(float(vp["lat"]), float(vp["lon"]))))
        except KeyError as exc:
            raise MeasurementParseError(f"{where}: missing field {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise MeasurementParseError(f"{where}: {exc}") from exc

    def rows():
        for i, m in enumerate(doc.get("measurements", [])):
            where = f"measurements[{i}]"
            try:
                yield str(m["src"]), str(m["dst"]), float(m["rtt_ms"]), where
            except KeyError as exc:
                raise MeasurementParseError(f"{where}: missing field {exc}") from exc
            except (TypeError, ValueError) as exc:
                raise MeasurementParseError(f"{where}: {exc}") from exc

    return _build_matrix(points, rows())


def _load_csv(source: IO, vantage_points: IO) -> LatencyMatrix:
    points = []
    vp_reader = csv.DictReader(_decode(vantage_points))
    for i, row in enumerate(vp_reader, start=2):
        try:
            points.append(VantagePoint(
                id=row["id"], name=row.get("name") or row["id"],
                location=GeoPoint(float(row["lat"]), float(row["lon"]))))
        except (KeyError, TypeError, ValueError) as exc:
            raise MeasurementParseError(f"vantage_points.csv line {i}: {exc}") from exc

    def rows():
        reader = csv.DictReader(_decode(source))
        for i, row in enumerate(reader, start=2):
            try:
                yield row["src"], row["dst"], float(row["rtt_ms"]), f"line {i}"
            except (KeyError, TypeError, ValueError) as exc:
                raise MeasurementParseError(f"line {i}: {exc}") from exc

    return _build_matrix(points, rows())


def compute_residual(matrix: LatencyMatrix, pair: Pair, mode: str = DEFAULT_RESIDUAL_MODE,
                     counter: Optional[ClampCounter] = None) -> float:
    """Residual latency of a measured pair in milliseconds.

    rtt-minus-2gcl compares the round trip against twice the one-way
    great-circle latency; half-rtt-minus-gcl halves the RTT instead.
    Negative residuals (geolocation noise) clamp to zero.
    """
    rtt = matrix.rtt(*pair)
    gcl = great_circle_latency(matrix.point(pair[0]).location,
                               matrix.point(pair[1]).location)
    if mode == "rtt-minus-2gcl":
        residual = rtt - 2.0 * gcl
    elif mode == "half-rtt-minus-gcl":
        residual = rtt / 2.0 - gcl
    else:
        raise ValueError(f"unknown residual mode {mode!r}")
    if residual < 0.0:
        if counter is not None:
            counter.bump()
        return 0.0
    return residual


def threshold_graph(matrix: LatencyMatrix, epsilon_ms: float,
                    mode: str = DEFAULT_RESIDUAL_MODE,
                    counter: Optional[ClampCounter] = None) -> DelayGraph:
    """Edges are the measured pairs whose residual is at most epsilon_ms."""
    if epsilon_ms < 0.0:
        raise ValueError("epsilon_ms must be non-negative")
    counter = counter if counter is not None else ClampCounter()
    edges = []
    for pair in matrix.pairs():
        residual = compute_residual(matrix, pair, mode, counter)
        if residual <= epsilon_ms:
            edges.append(GraphEdge(u=pair[0], v=pair[1], residual_ms=residual,
                                   rtt_ms=matrix.rtt(*pair)))
    if counter.count:
        logger.warning("%d residual(s) clamped to zero", counter.count)
    return DelayGraph(vertices=list(matrix.points), edges=edges, epsilon_ms=epsilon_ms)


def cluster_vantage_points(matrix: LatencyMatrix, cutoff_km: float) -> LatencyMatrix:
    """Collapse nearby vantage points by single-linkage clustering on
    great-circle distance.

    Merging stops once the nearest pair of clusters is at least cutoff_km
    apart, which makes the clusters exactly the connected components of the
    "closer than cutoff" graph. Each cluster is represented by its medoid
    (minimum summed distance, ties broken by lexicographic id) and the
    latency between two clusters is the minimum measured latency between
    any pair of their members.
    """
    if cutoff_km < 0.0:
        raise ValueError("cutoff_km must be non-negative")
    ids = sorted(matrix.ids())
    parent = {i: i for i in ids}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            d = great_circle_distance(matrix.point(a).location, matrix.point(b).location)
            if d < cutoff_km:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    clusters: dict[str, list[str]] = {}
    for vp_id in ids:
        clusters.setdefault(find(vp_id), []).append(vp_id)

    representatives: dict[str, str] = {}
    for root, members in clusters.items():
        best = None
        for cand in sorted(members):
            total = sum(great_circle_distance(matrix.point(cand).location,
                                              matrix.point(m).location)
                        for m in members)
            if best is None or total < best[0] - 1e-12:
                best = (total, cand)
        representatives[root] = best[1]

    member_root = {m: root for root, members in clusters.items() for m in members}
    merged = LatencyMatrix(points=[matrix.point(representatives[root])
                                   for root in sorted(clusters)])
    rep_of = {m: representatives[member_root[m]] for m in ids}
    for (a, b), rtt in matrix.rtt_min_ms.items():
        ra, rb = rep_of[a], rep_of[b]
        if ra == rb:
            continue
        merged.add_measurement(ra, rb, rtt)
    return merged


@dataclass(frozen=True)
class TivViolation:
    """RTT(pair) exceeds RTT(pair[0], via) + RTT(via, pair[1]) + slack."""

    pair: Pair
    via: str
    excess_ms: float


def detect_tivs(matrix: LatencyMatrix, slack_ms: float = 0.0) -> list[TivViolation]:
    """All triangle-inequality violations among fully measured triples."""
    if slack_ms < 0.0:
        raise ValueError("slack_ms must be non-negative")
    ids = sorted(matrix.ids())
    out = []
    for i, a in enumerate(ids):
        for j in range(i + 1, len(ids)):
            b = ids[j]
            if not matrix.has_pair(a, b):
                continue
            long_rtt = matrix.rtt(a, b)
            for via in ids:
                if via in (a, b):
                    continue
                if not (matrix.has_pair(a, via) and matrix.has_pair(via, b)):
                    continue
                excess = long_rtt - (matrix.rtt(a, via) + matrix.rtt(via, b) + slack_ms)
                if excess > 0.0:
                    out.append(TivViolation(pair=(a, b), via=via, excess_ms=excess))
    return out


def remove_tiv_pairs(matrix: LatencyMatrix, slack_ms: float = 0.0) -> LatencyMatrix:
    """Greedily delete the measured pair that is the long side of the most
    violations until none remain. Deterministic: ties break on pair ids."""
    rtts = dict(matrix.rtt_min_ms)
    current = LatencyMatrix(points=list(matrix.points), rtt_min_ms=rtts)
    while True:
        violations = detect_tivs(current, slack_ms)
        if not violations:
            return current
        counts: dict[Pair, int] = {}
        for v in violations:
            counts[v.pair] = counts.get(v.pair, 0) + 1
        best_count = max(counts.values())
        worst = min(p for p, c in counts.items() if c == best_count)
        del rtts[worst]
