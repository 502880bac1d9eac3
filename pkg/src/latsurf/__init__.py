"""latsurf: latency measurements -> curvature-annotated graphs -> optimized
manifold surfaces whose geodesics approximate the measured latencies."""

from .geo import (
    GeoPoint,
    Projection,
    fit_projection,
    great_circle_distance,
    great_circle_latency,
    project,
    unproject,
)
from .netgraph import (
    DelayGraph,
    GraphEdge,
    LatencyMatrix,
    VantagePoint,
    cluster_vantage_points,
    compute_residual,
    detect_tivs,
    load_measurements,
    remove_tiv_pairs,
    threshold_graph,
)
from .ricci import Distribution, TransportPlan, curvature_graph, edge_curvature, wasserstein1
from .mesh import (
    FaceGeometry,
    HalfEdgeMesh,
    LaplacianPair,
    VertexCurvatures,
    build_grid_mesh,
    curvature_partials,
    face_geometry,
    init_sphere_cap,
    laplacians,
    vertex_curvatures,
)
from .loss import LossParams, LossReport, edge_ball, curvature_loss, smoothness_loss, total_loss_and_gradient
from .optimize import (
    OptimizeConfig,
    OptimizeResult,
    flatten_exterior,
    optimize_heights,
    subtract_initial_heights,
)
from .geodesic import (
    GeodesicEngine,
    GeodesicResult,
    PredictorReport,
    StabilityReport,
    fit_latency_predictor,
    predictor_report,
    stability_report,
    surface_geodesic,
)
from .artifact import ManifoldArtifact, export_manifold, import_manifold
from .pipeline import PipelineConfig, run_pipeline, run_pipeline_on_matrix

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
