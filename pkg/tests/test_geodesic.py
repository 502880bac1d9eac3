import math

import numpy as np
import pytest

from latsurf.geo import GeoPoint, fit_projection
from latsurf.geodesic import (
    DegenerateRegressionError,
    GeodesicEngine,
    OutsideDomainError,
    fit_latency_predictor,
    predictor_report,
    surface_geodesic,
    ReportOptions,
)
from latsurf.mesh import build_grid_mesh
from latsurf.netgraph import DelayGraph, GraphEdge, LatencyMatrix, VantagePoint

UNIT = ((0.0, 0.0), (1.0, 1.0))


def bumpy_mesh(k=15, seed=0):
    mesh = build_grid_mesh(k, UNIT)
    rng = np.random.default_rng(seed)
    xc = rng.uniform(0.3, 0.7, size=3)
    yc = rng.uniform(0.3, 0.7, size=3)
    z = np.zeros(mesh.n_vertices)
    for cx, cy, amp in zip(xc, yc, (0.15, -0.1, 0.12)):
        z += amp * np.exp(-(((mesh.xy[:, 0] - cx) ** 2
                             + (mesh.xy[:, 1] - cy) ** 2) / 0.02))
    mesh.z = z
    return mesh


class TestSurfaceGeodesic:
    def test_flat_diagonal_exact(self):
        mesh = build_grid_mesh(12, UNIT)
        res = surface_geodesic(mesh, (0.0, 0.0), (1.0, 1.0), subdivision=4)
        assert res.length == pytest.approx(math.sqrt(2.0), rel=0.01)

    def test_flat_arbitrary_pair_close_to_straight(self):
        mesh = build_grid_mesh(12, UNIT)
        res = surface_geodesic(mesh, (0.12, 0.2), (0.83, 0.67), subdivision=4)
        straight = math.hypot(0.83 - 0.12, 0.67 - 0.2)
        assert straight <= res.length <= 1.01 * straight

    def test_src_equals_dst(self):
        mesh = bumpy_mesh()
        res = surface_geodesic(mesh, (0.4, 0.4), (0.4, 0.4))
        assert res.length == 0.0
        assert res.polyline.shape == (1, 3)

    def test_outside_domain(self):
        mesh = build_grid_mesh(5, UNIT)
        with pytest.raises(OutsideDomainError):
            surface_geodesic(mesh, (-0.2, 0.5), (0.5, 0.5))

    def test_length_equals_polyline_arc_length(self):
        mesh = bumpy_mesh()
        res = surface_geodesic(mesh, (0.1, 0.15), (0.9, 0.8), subdivision=3)
        arc = float(np.sum(np.linalg.norm(np.diff(res.polyline, axis=0), axis=1)))
        assert res.length == pytest.approx(arc, abs=1e-12)

    def test_polyline_endpoints_are_queried_surface_points(self):
        mesh = bumpy_mesh()
        engine = GeodesicEngine(mesh, subdivision=3)
        res = engine.query((0.25, 0.3), (0.7, 0.66))
        _, p_src = engine.locate((0.25, 0.3))
        _, p_dst = engine.locate((0.7, 0.66))
        assert np.allclose(res.polyline[0], p_src, atol=1e-12)
        assert np.allclose(res.polyline[-1], p_dst, atol=1e-12)

    def test_symmetry(self):
        mesh = bumpy_mesh()
        engine = GeodesicEngine(mesh, subdivision=4)
        rng = np.random.default_rng(7)
        for _ in range(5):
            a = tuple(rng.uniform(0.05, 0.95, 2))
            b = tuple(rng.uniform(0.05, 0.95, 2))
            ab = engine.query(a, b).length
            ba = engine.query(b, a).length
            assert abs(ab - ba) < 1e-9

    def test_refinement_monotone(self):
        mesh = bumpy_mesh()
        engines = {s: GeodesicEngine(mesh, subdivision=s) for s in (0, 4, 8)}
        rng = np.random.default_rng(11)
        for _ in range(8):
            a = tuple(rng.uniform(0.05, 0.95, 2))
            b = tuple(rng.uniform(0.05, 0.95, 2))
            l0 = engines[0].query(a, b).length
            l4 = engines[4].query(a, b).length
            l8 = engines[8].query(a, b).length
            assert l4 <= l0 + 1e-12
            assert l8 <= l4 + 1e-9

    def test_geodesic_at_least_planar_chord(self):
        mesh = bumpy_mesh()
        engine = GeodesicEngine(mesh, subdivision=4)
        rng = np.random.default_rng(3)
        for _ in range(6):
            a = rng.uniform(0.05, 0.95, 2)
            b = rng.uniform(0.05, 0.95, 2)
            res = engine.query(tuple(a), tuple(b))
            assert res.length >= float(np.hypot(*(b - a))) - 1e-12

    def test_pairwise_matches_single_queries(self):
        mesh = bumpy_mesh()
        engine = GeodesicEngine(mesh, subdivision=3)
        pts = [(0.1, 0.1), (0.8, 0.3), (0.45, 0.85)]
        table = engine.pairwise_lengths(pts)
        for i in range(3):
            assert table[i, i] == 0.0
            for j in range(i + 1, 3):
                single = engine.query(pts[i], pts[j]).length
                assert table[i, j] == pytest.approx(single, abs=1e-9)


class TestFitLatencyPredictor:
    def test_exact_linear_r2_one(self):
        fit = fit_latency_predictor([(1.0, 3.0), (2.0, 6.0), (3.0, 9.0)])
        assert fit.slope == pytest.approx(3.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_constant_rtt_with_intercept(self):
        fit = fit_latency_predictor([(1.0, 5.0), (2.0, 5.0), (3.0, 5.0)],
                                    with_intercept=True)
        assert fit.slope == pytest.approx(0.0, abs=1e-12)
        assert fit.intercept == pytest.approx(5.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(0.0, abs=1e-12)

    def test_three_point_ols_oracle(self):
        # Hand-computed: slope 1.95, intercept 0.1, r2 = 1 - 0.015/7.62.
        fit = fit_latency_predictor([(1.0, 2.1), (2.0, 3.9), (3.0, 6.0)],
                                    with_intercept=True)
        assert fit.slope == pytest.approx(1.95, abs=1e-12)
        assert fit.intercept == pytest.approx(0.1, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0 - 0.015 / 7.62, abs=1e-12)

    def test_degenerate_distances(self):
        with pytest.raises(DegenerateRegressionError):
            fit_latency_predictor([(2.0, 1.0), (2.0, 3.0)])

    def test_single_pair(self):
        with pytest.raises(DegenerateRegressionError):
            fit_latency_predictor([(1.0, 2.0)])


def flat_equator_setup():
    """Vantage points on the equator with an equirectangular projection and
    a flat mesh: geodesic and great-circle fits must coincide (distances are
    proportional)."""
    ids = ["a", "b", "c", "d"]
    lons = [0.0, 1.0, 2.5, 4.0]
    points = [VantagePoint(id=i, name=i, location=GeoPoint(0.0, lon))
              for i, lon in zip(ids, lons)]
    matrix = LatencyMatrix(points=points)
    rng = np.random.default_rng(5)
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            d = abs(lons[j] - lons[i])
            matrix.add_measurement(ids[i], ids[j], 10.0 * d + rng.uniform(0, 0.5))
    proj = fit_projection([p.location for p in points], kind="equirectangular")
    from latsurf.geo import project as proj_fn
    xy = {p.id: proj_fn(p.location, proj) for p in points}
    edges = [GraphEdge(u=a, v=b, residual_ms=0.0, ricci=0.0, rtt_ms=matrix.rtt(a, b))
             for a, b in matrix.pairs()]
    graph = DelayGraph(vertices=points, edges=edges, epsilon_ms=50.0, xy=xy)
    # k = 21 puts a grid row exactly on the equator line, so flat-mesh
    # geodesics along it are exact and proportional to great-circle distance.
    mesh = build_grid_mesh(21, proj.bounds)
    return matrix, graph, mesh, proj


class TestPredictorReport:
    def test_flat_equator_fits_coincide(self):
        matrix, graph, mesh, proj = flat_equator_setup()
        report = predictor_report(matrix, graph, mesh, proj,
                                  ReportOptions(sweep_epsilons=[50.0]))
        # Distances are proportional, so predictions and r^2 must agree.
        assert report.geodesic_fit.r_squared == pytest.approx(
            report.gcd_fit.r_squared, abs=1e-6)
        for row in report.rows:
            assert row.delta_geo_ms == pytest.approx(row.delta_gcd_ms, abs=1e-6)
            assert row.epsilon_first_ms == 50.0

    def test_single_pair_errors(self):
        points = [VantagePoint(id="a", name="a", location=GeoPoint(0, 0)),
                  VantagePoint(id="b", name="b", location=GeoPoint(0, 1))]
        matrix = LatencyMatrix(points=points)
        matrix.add_measurement("a", "b", 10.0)
        proj = fit_projection([p.location for p in points], kind="equirectangular")
        from latsurf.geo import project as proj_fn
        xy = {p.id: proj_fn(p.location, proj) for p in points}
        graph = DelayGraph(vertices=points,
                           edges=[GraphEdge(u="a", v="b", residual_ms=0.0, ricci=0.0)],
                           epsilon_ms=50.0, xy=xy)
        mesh = build_grid_mesh(8, proj.bounds)
        with pytest.raises(DegenerateRegressionError):
            predictor_report(matrix, graph, mesh, proj)

    def test_epsilon_first_appearance_uses_sweep_grid(self):
        matrix, graph, mesh, proj = flat_equator_setup()
        report = predictor_report(
            matrix, graph, mesh, proj,
            ReportOptions(sweep_epsilons=[0.1, 5.0, 50.0]))
        from latsurf.netgraph import compute_residual
        for row in report.rows:
            residual = compute_residual(matrix, row.pair)
            expected = next(e for e in (0.1, 5.0, 50.0) if residual <= e)
            assert row.epsilon_first_ms == expected
