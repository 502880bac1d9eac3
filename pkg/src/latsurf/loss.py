"""Edge-ball construction, curvature loss, smoothness loss, and the
analytic gradient of the total objective with respect to mesh heights.

Two curvature-loss normalizations are shipped because the length-weighted
form and the uniform per-edge form are both defensible; the default is
length-weighted and the choice is recorded in exported artifacts. Ball
membership depends only on the fixed xy layout, so balls are computed once
per (mesh, graph) and reused across optimizer iterations; one evaluation
then costs O(n + |E| sqrt(n)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mesh import (
    HalfEdgeMesh,
    assemble_height_gradient,
    face_geometry,
    laplacians,
    vertex_curvatures,
)
from .netgraph import DelayGraph

CURVATURE_LOSS_VARIANTS = ("length-weighted", "uniform")


class EmptyEdgeBallError(ValueError):
    """No mesh vertex fell inside the ball: the radius is below the mesh
    resolution and the tube around the edge would be empty."""


@dataclass
class LossParams:
    epsilon_ms: float
    lambda_smooth: float = 0.001
    ball_radius: Optional[float] = None  # None: longest flat-mesh edge (cell diagonal)
    curvature_loss_variant: str = "length-weighted"

    def __post_init__(self):
        if self.lambda_smooth < 0.0:
            raise ValueError("lambda_smooth must be non-negative")
        if self.ball_radius is not None and self.ball_radius <= 0.0:
            raise ValueError("ball_radius must be positive")
        if self.curvature_loss_variant not in CURVATURE_LOSS_VARIANTS:
            raise ValueError(f"unknown curvature loss variant "
                             f"{self.curvature_loss_variant!r}")

    def resolved_radius(self, mesh: HalfEdgeMesh) -> float:
        return self.ball_radius if self.ball_radius is not None else mesh.cell_diagonal()


@dataclass
class LossReport:
    curvature_loss: float
    smoothness_loss: float
    total: float
    gradient: Optional[np.ndarray]
    ball_sizes: dict = field(default_factory=dict)


def edge_ball(mesh: HalfEdgeMesh, endpoint_a, endpoint_b, r: float) -> np.ndarray:
    """Indices of non-boundary mesh vertices within xy-distance r of the
    projected edge segment.

    Membership is the union of three strict tests: inside the open disk at
    either endpoint, or projecting onto the segment (both half-space dot
    products non-negative) with perpendicular distance strictly below r.
    """
    pa = np.asarray(endpoint_a, dtype=float)
    pb = np.asarray(endpoint_b, dtype=float)
    p = mesh.xy
    da = np.linalg.norm(p - pa, axis=1)
    db = np.linalg.norm(p - pb, axis=1)
    inside = (da < r) | (db < r)

    ab = pb - pa
    ab2 = float(ab @ ab)
    if ab2 > 0.0:
        fwd = (p - pa) @ ab
        back = (p - pb) @ (-ab)
        foot = pa + np.outer(fwd / ab2, ab)
        perp = np.linalg.norm(p - foot, axis=1)
        inside |= (fwd >= 0.0) & (back >= 0.0) & (perp < r)

    inside &= ~mesh.boundary_vertex
    idx = np.nonzero(inside)[0]
    if idx.size == 0:
        raise EmptyEdgeBallError(
            f"ball of radius {r} around segment {tuple(pa)}-{tuple(pb)} "
            "contains no interior mesh vertex")
    return idx


def _graph_xy(graph: DelayGraph) -> dict:
    if graph.xy is None:
        raise ValueError("graph has no projected vertex positions; "
                         "project it before computing losses")
    return graph.xy


class LossEvaluator:
    """Precomputes balls and edge weights; evaluates value and gradient for
    a given height vector."""

    def __init__(self, mesh: HalfEdgeMesh, graph: DelayGraph, params: LossParams):
        self.mesh = mesh
        self.graph = graph
        self.params = params
        xy = _graph_xy(graph)
        r = params.resolved_radius(mesh)

        edges = sorted(graph.edges, key=lambda e: (e.u, e.v))
        for e in edges:
            if e.ricci is None:
                raise ValueError(f"edge ({e.u}, {e.v}) has no Ricci curvature")
        self.edges = edges
        self.balls = [edge_ball(mesh, xy[e.u], xy[e.v], r) for e in edges]
        self.targets = np.array([e.ricci for e in edges])
        lengths = np.array([float(np.hypot(xy[e.v][0] - xy[e.u][0],
                                           xy[e.v][1] - xy[e.u][1])) for e in edges])
        if params.curvature_loss_variant == "length-weighted":
            self.coef = lengths / np.sum(lengths) if len(edges) else lengths
        else:
            self.coef = (np.full(len(edges), 1.0 / len(edges))
                         if edges else np.zeros(0))
        self.ball_sizes = {(e.u, e.v): len(b) for e, b in zip(edges, self.balls)}
        self.interior = ~mesh.boundary_vertex

    def evaluate(self, z: np.ndarray, with_gradient: bool = True) -> LossReport:
        mesh, params = self.mesh, self.params
        geom = face_geometry(mesh, z)
        lap = laplacians(mesh, geom)
        curv = vertex_curvatures(mesh, geom, lap)

        # Curvature term plus its adjoint weight on the Gaussian field.
        curvature = 0.0
        gamma = np.zeros(mesh.n_vertices)
        for coef, target, ball in zip(self.coef, self.targets, self.balls):
            diff = target - curv.gaussian[ball]
            w = coef / len(ball)
            curvature += w * float(diff @ diff)
            if with_gradient:
                np.add.at(gamma, ball, 2.0 * w * (curv.gaussian[ball] - target))

        # Smoothness: -(k+^T L_D k+ + k-^T L_D k-) * total area.
        kp, km = curv.principal_plus, curv.principal_minus
        ld_kp = lap.dirichlet @ kp
        ld_km = lap.dirichlet @ km
        quad = -(kp @ ld_kp + km @ ld_km)
        area_total = float(np.sum(geom.face_area))
        smoothness = quad * area_total

        total = curvature + params.lambda_smooth * smoothness
        if not with_gradient:
            return LossReport(curvature_loss=curvature, smoothness_loss=smoothness,
                              total=total, gradient=None, ball_sizes=self.ball_sizes)

        lam = params.lambda_smooth
        a_plus = -2.0 * area_total * ld_kp
        a_minus = -2.0 * area_total * ld_km
        delta = kp - km
        safe_delta = np.where(curv.clamped, 1.0, delta)
        c_mean = np.where(curv.clamped, a_plus + a_minus,
                          (2.0 * kp * a_plus - 2.0 * km * a_minus) / safe_delta)
        c_gauss = np.where(curv.clamped, 0.0, (a_minus - a_plus) / safe_delta)

        # Direct dependence of L_D entries on the heights: each interior
        # half-edge contributes -(1/2) d cot * (dk)^2 to the quadratic form.
        interior_he = (self.interior[mesh.he_src] & self.interior[mesh.he_dst])
        dkp = kp[mesh.he_src] - kp[mesh.he_dst]
        dkm = km[mesh.he_src] - km[mesh.he_dst]
        w_cot = np.where(interior_he,
                         0.5 * area_total * (dkp * dkp + dkm * dkm), 0.0)
        w_area = np.full(mesh.n_faces, quad)

        grad = assemble_height_gradient(
            mesh, geom, lap, curv,
            gamma_gaussian=gamma + lam * c_gauss,
            c_mean=lam * c_mean,
            w_cot_extra=lam * w_cot,
            w_area_extra=lam * w_area)
        return LossReport(curvature_loss=curvature, smoothness_loss=smoothness,
                          total=total, gradient=grad, ball_sizes=self.ball_sizes)


def curvature_loss(mesh: HalfEdgeMesh, graph: DelayGraph, params: LossParams) -> float:
    return LossEvaluator(mesh, graph, params).evaluate(mesh.z, with_gradient=False).curvature_loss


def smoothness_loss(mesh: HalfEdgeMesh, laplacians_pair, curvatures) -> float:
    """-(k+^T L_D k+ + k-^T L_D k-) times the total surface area, each
    triangle counted once."""
    geom = face_geometry(mesh)
    kp, km = curvatures.principal_plus, curvatures.principal_minus
    quad = -(kp @ (laplacians_pair.dirichlet @ kp) + km @ (laplacians_pair.dirichlet @ km))
    return quad * float(np.sum(geom.face_area))


def total_loss_and_gradient(mesh: HalfEdgeMesh, graph: DelayGraph,
                            params: LossParams) -> LossReport:
    return LossEvaluator(mesh, graph, params).evaluate(mesh.z)
