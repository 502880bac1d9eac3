"""Quasi-Newton height optimization and the two presentation passes:
initial-height subtraction and exterior flattening."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import shapely
from scipy.optimize import minimize

from .loss import LossEvaluator, LossParams
from .mesh import HalfEdgeMesh
from .netgraph import DelayGraph

logger = logging.getLogger(__name__)


class NonFiniteLossError(RuntimeError):
    pass


@dataclass
class OptimizeConfig:
    max_iterations: int = 2000
    gradient_tolerance: float = 1e-6      # inf-norm of the gradient
    relative_loss_tolerance: float = 1e-9
    lbfgs_memory: int = 10
    record_history: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if min(self.gradient_tolerance, self.relative_loss_tolerance) <= 0.0:
            raise ValueError("tolerances must be positive")


@dataclass
class OptimizeResult:
    heights: np.ndarray
    loss_history: list[float] = field(default_factory=list)
    termination: str = ""
    iterations: int = 0
    wall_time_s: float = 0.0
    initial_loss: float = 0.0
    final_loss: float = 0.0


def optimize_heights(mesh: HalfEdgeMesh, graph: DelayGraph, loss_params: LossParams,
                     config: Optional[OptimizeConfig] = None,
                     z0: Optional[np.ndarray] = None) -> OptimizeResult:
    """Minimize the total loss over the height vector with L-BFGS-B and no
    bounds. Deterministic given inputs; the loss history covers accepted
    iterates only and is non-increasing by the line search's sufficient
    decrease condition."""
    config = config or OptimizeConfig()
    evaluator = LossEvaluator(mesh, graph, loss_params)
    z0 = mesh.z.copy() if z0 is None else np.asarray(z0, dtype=float).copy()

    last: dict = {}

    def fun(z):
        report = evaluator.evaluate(z)
        if not np.isfinite(report.total):
            raise NonFiniteLossError(f"loss became non-finite: {report.total}")
        last["z"] = z.copy()
        last["f"] = report.total
        return report.total, report.gradient

    history: list[float] = []
    initial = evaluator.evaluate(z0, with_gradient=False).total
    if config.record_history:
        history.append(initial)

    def callback(zk):
        if not config.record_history:
            return
        if "z" in last and np.array_equal(last["z"], zk):
            history.append(last["f"])
        else:
            history.append(evaluator.evaluate(zk, with_gradient=False).total)

    start = time.perf_counter()
    res = minimize(fun, z0, jac=True, method="L-BFGS-B", callback=callback,
                   options={"maxiter": config.max_iterations,
                            "maxcor": config.lbfgs_memory,
                            "ftol": config.relative_loss_tolerance,
                            "gtol": config.gradient_tolerance})
    wall = time.perf_counter() - start

    if res.status == 0:
        termination = ("gradient-tolerance" if "PROJECTED_GRADIENT" in res.message
                       else "loss-tolerance")
    elif res.status == 1:
        termination = "max-iterations"
    else:
        # Line-search failure: report the last valid iterate instead of
        # crashing.
        termination = f"line-search-failure: {res.message}"
        logger.warning("optimizer stopped early: %s", res.message)

    return OptimizeResult(heights=np.asarray(res.x, dtype=float),
                          loss_history=history, termination=termination,
                          iterations=int(res.nit), wall_time_s=wall,
                          initial_loss=initial, final_loss=float(res.fun))


def subtract_initial_heights(heights: np.ndarray, initial_heights: np.ndarray) -> np.ndarray:
    """Presentation-only: pull out the initialization so a curved base
    surface does not dominate the view."""
    heights = np.asarray(heights, dtype=float)
    initial_heights = np.asarray(initial_heights, dtype=float)
    if heights.shape != initial_heights.shape:
        raise ValueError(f"shape mismatch: {heights.shape} vs {initial_heights.shape}")
    return heights - initial_heights


def flatten_exterior(mesh: HalfEdgeMesh, graph: DelayGraph, falloff_width: float,
                     heights: Optional[np.ndarray] = None) -> np.ndarray:
    """Shift heights so the minimum is zero, then ramp them down to zero
    with distance from the union of the per-component convex hulls of the
    graph's projected vertices."""
    if falloff_width <= 0.0:
        raise ValueError("falloff_width must be positive")
    if graph.xy is None:
        raise ValueError("graph has no projected vertex positions")
    if not graph.vertices:
        raise ValueError("graph has no vertices")
    z = (mesh.z if heights is None else np.asarray(heights, dtype=float)).copy()
    z -= z.min()

    hulls = []
    for comp in graph.connected_components():
        pts = shapely.MultiPoint([graph.xy[v] for v in comp])
        hulls.append(pts.convex_hull)  # point / segment / polygon as appropriate
    mesh_points = shapely.points(mesh.xy)
    dist = np.min(np.stack([shapely.distance(mesh_points, h) for h in hulls]), axis=0)
    ramp = np.clip(1.0 - dist / falloff_width, 0.0, 1.0)
    return z * ramp
