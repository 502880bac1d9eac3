"""Exact Ollivier-Ricci curvature of delay-graph edges.

Curvature of an edge (x, y) is 1 - W1(m_x, m_y), where m_x spreads mass
uniformly over the neighbors of x (no mass left on x itself) and the ground
metric is hop count on the thresholded, unweighted graph. The transport
problem is solved exactly as a linear program; graphs here are small enough
that exactness costs nothing and keeps oracle tests meaningful.

Adding an edge between two common neighbors of (x, y) can only shrink hop
distances, hence never decreases the curvature of (x, y); curvature grows
with local connectivity.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linprog

from .netgraph import DelayGraph


class DisconnectedSupportError(ValueError):
    """Transport between supports in different components is infinite."""


@dataclass(frozen=True)
class Distribution:
    support: tuple[str, ...]
    mass: tuple[float, ...]

    def __post_init__(self):
        if len(self.support) != len(set(self.support)):
            raise ValueError("support ids must be distinct")
        if any(m <= 0.0 for m in self.mass):
            raise ValueError("masses must be positive")
        if abs(sum(self.mass) - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {sum(self.mass)}, not 1")


@dataclass(frozen=True)
class TransportPlan:
    entries: tuple[tuple[str, str, float], ...]
    cost: float


def uniform_neighbor_measure(graph: DelayGraph, vertex: str) -> Distribution:
    """Mass 1/deg(vertex) on each neighbor."""
    neighbors = sorted(graph.adjacency()[vertex])
    if not neighbors:
        raise ValueError(f"vertex {vertex!r} has no neighbors")
    w = 1.0 / len(neighbors)
    return Distribution(support=tuple(neighbors), mass=(w,) * len(neighbors))


def hop_distances(graph: DelayGraph, source: str) -> dict[str, int]:
    """BFS hop counts from source over the unweighted graph."""
    adj = graph.adjacency()
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def wasserstein1(graph: DelayGraph, mx: Distribution, my: Distribution
                 ) -> tuple[float, TransportPlan]:
    """Exact optimum of the transportation linear program between mx and my
    under hop-count ground distance."""
    cost = np.empty((len(mx.support), len(my.support)))
    for i, s in enumerate(mx.support):
        dist = hop_distances(graph, s)
        for j, t in enumerate(my.support):
            if t not in dist:
                raise DisconnectedSupportError(
                    f"supports of {s!r} and {t!r} lie in different components")
            cost[i, j] = dist[t]

    n, m = cost.shape
    # Marginal constraints: rows sum to mx.mass, columns to my.mass.
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([mx.mass, my.mass])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    flow = res.x.reshape(n, m)
    entries = tuple((mx.support[i], my.support[j], float(flow[i, j]))
                    for i in range(n) for j in range(m) if flow[i, j] > 1e-15)
    total = float(np.sum(flow * cost))
    return total, TransportPlan(entries=entries, cost=total)


def edge_curvature(graph: DelayGraph, edge: tuple[str, str]) -> float:
    """kappa = 1 - W1(m_u, m_v); lies in [-2, 1] for hop distances."""
    u, v = edge
    cost, _ = wasserstein1(graph, uniform_neighbor_measure(graph, u),
                           uniform_neighbor_measure(graph, v))
    return 1.0 - cost


def curvature_graph(graph: DelayGraph) -> DelayGraph:
    """Annotate every edge with its Ricci curvature."""
    edges = [replace(e, ricci=edge_curvature(graph, (e.u, e.v))) for e in graph.edges]
    return DelayGraph(vertices=list(graph.vertices), edges=edges,
                      epsilon_ms=graph.epsilon_ms, xy=graph.xy)
