import numpy as np
import pytest

from latsurf.geo import GeoPoint
from latsurf.loss import (
    EmptyEdgeBallError,
    LossEvaluator,
    LossParams,
    edge_ball,
    smoothness_loss,
    total_loss_and_gradient,
)
from latsurf.mesh import (
    build_grid_mesh,
    face_geometry,
    init_sphere_cap,
    laplacians,
    vertex_curvatures,
)
from latsurf.netgraph import DelayGraph, GraphEdge, VantagePoint

UNIT = ((0.0, 0.0), (1.0, 1.0))


def toy_graph(edge_specs, positions):
    """edge_specs: list of (u, v, ricci); positions: id -> xy."""
    vertices = [VantagePoint(id=i, name=i, location=GeoPoint(0, 0))
                for i in sorted(positions)]
    edges = [GraphEdge(u=u, v=v, residual_ms=0.0, ricci=r) for u, v, r in edge_specs]
    return DelayGraph(vertices=vertices, edges=edges, epsilon_ms=1.0, xy=dict(positions))


class TestEdgeBall:
    def test_vertex_exactly_at_radius_excluded(self):
        mesh = build_grid_mesh(5, UNIT)  # pitch 0.25
        # Horizontal segment along a grid line; the row above sits at exactly
        # one pitch.
        ball = edge_ball(mesh, (0.25, 0.25), (0.75, 0.25), r=0.25)
        xy = mesh.xy[ball]
        assert np.all(np.abs(xy[:, 1] - 0.25) < 0.25)
        row_above = np.nonzero((mesh.xy[:, 1] == 0.5) & (mesh.xy[:, 0] == 0.5))[0][0]
        assert row_above not in ball

    def test_small_radius_contains_near_segment_vertices_or_errors(self):
        mesh = build_grid_mesh(5, UNIT)
        try:
            ball = edge_ball(mesh, (0.25, 0.25), (0.75, 0.25), r=0.1)
        except EmptyEdgeBallError:
            return
        on_segment = np.nonzero((mesh.xy[:, 1] == 0.25)
                                & (mesh.xy[:, 0] >= 0.25) & (mesh.xy[:, 0] <= 0.75))[0]
        assert set(on_segment) <= set(ball)

    def test_empty_ball_raises(self):
        mesh = build_grid_mesh(3, UNIT)
        with pytest.raises(EmptyEdgeBallError):
            edge_ball(mesh, (0.24, 0.26), (0.26, 0.26), r=1e-4)

    def test_boundary_vertices_excluded(self):
        mesh = build_grid_mesh(5, UNIT)
        ball = edge_ball(mesh, (0.1, 0.1), (0.9, 0.9), r=0.3)
        assert not np.any(mesh.boundary_vertex[ball])

    def test_size_grows_linearly_with_span(self):
        mesh = build_grid_mesh(21, UNIT)  # pitch 0.05
        r = mesh.cell_diagonal()
        sizes = []
        for cols in (4, 8, 16):
            span = cols * 0.05
            ball = edge_ball(mesh, (0.1, 0.5), (0.1 + span, 0.5), r=r)
            brute = [i for i in range(mesh.n_vertices)
                     if not mesh.boundary_vertex[i] and _dist_to_segment(
                         mesh.xy[i], (0.1, 0.5), (0.1 + span, 0.5)) < r]
            assert sorted(ball) == sorted(brute)
            sizes.append(len(ball))
        growth1 = sizes[1] - sizes[0]
        growth2 = sizes[2] - sizes[1]
        assert growth2 == pytest.approx(2 * growth1, rel=0.35)


def _dist_to_segment(p, a, b):
    p, a, b = map(np.asarray, (p, a, b))
    ab = b - a
    t = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


class TestCurvatureLoss:
    def test_flat_zero_targets(self):
        mesh = build_grid_mesh(8, UNIT)
        g = toy_graph([("a", "b", 0.0)], {"a": (0.3, 0.5), "b": (0.7, 0.5)})
        report = total_loss_and_gradient(mesh, g, LossParams(epsilon_ms=1.0))
        assert report.curvature_loss == pytest.approx(0.0, abs=1e-12)
        assert report.total == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(report.gradient, 0.0, atol=1e-12)

    @pytest.mark.parametrize("variant", ["length-weighted", "uniform"])
    def test_single_edge_constant_target(self, variant):
        mesh = build_grid_mesh(8, UNIT)
        c = 0.37
        g = toy_graph([("a", "b", c)], {"a": (0.3, 0.5), "b": (0.7, 0.5)})
        params = LossParams(epsilon_ms=1.0, curvature_loss_variant=variant)
        report = total_loss_and_gradient(mesh, g, params)
        assert report.curvature_loss == pytest.approx(c * c, abs=1e-12)

    def test_two_edge_length_weighting(self):
        # Mismatch d is constant over each ball; lengths 1 : 3.
        mesh = build_grid_mesh(12, ((0.0, 0.0), (4.0, 1.0)))
        g = toy_graph([("a", "b", 0.2), ("c", "d", 0.4)],
                      {"a": (0.5, 0.5), "b": (1.2, 0.5),
                       "c": (0.5, 0.8), "d": (2.6, 0.8)})
        xy = g.xy
        len_ab = np.hypot(*(np.subtract(xy["b"], xy["a"])))
        len_cd = np.hypot(*(np.subtract(xy["d"], xy["c"])))
        lw = total_loss_and_gradient(
            mesh, g, LossParams(epsilon_ms=1, curvature_loss_variant="length-weighted"))
        uni = total_loss_and_gradient(
            mesh, g, LossParams(epsilon_ms=1, curvature_loss_variant="uniform"))
        d1, d2 = 0.2 ** 2, 0.4 ** 2
        expected_lw = (len_ab * d1 + len_cd * d2) / (len_ab + len_cd)
        assert lw.curvature_loss == pytest.approx(expected_lw, abs=1e-12)
        assert uni.curvature_loss == pytest.approx((d1 + d2) / 2.0, abs=1e-12)

    def test_ball_sizes_reported(self):
        mesh = build_grid_mesh(10, UNIT)
        g = toy_graph([("a", "b", 0.1)], {"a": (0.3, 0.5), "b": (0.7, 0.5)})
        report = total_loss_and_gradient(mesh, g, LossParams(epsilon_ms=1.0))
        assert report.ball_sizes[("a", "b")] > 0


class TestSmoothnessLoss:
    def test_flat_zero(self):
        mesh = build_grid_mesh(8, UNIT)
        geom = face_geometry(mesh)
        lap = laplacians(mesh, geom)
        curv = vertex_curvatures(mesh, geom, lap)
        assert smoothness_loss(mesh, lap, curv) == pytest.approx(0.0, abs=1e-12)

    def test_cap_much_smoother_than_noisy_cap(self):
        mesh = build_grid_mesh(40, UNIT)
        cap = init_sphere_cap(mesh, 0.05)
        rng = np.random.default_rng(3)
        noisy = cap + 0.002 * rng.standard_normal(mesh.n_vertices)

        def smooth_val(z):
            geom = face_geometry(mesh, z)
            lap = laplacians(mesh, geom)
            curv = vertex_curvatures(mesh, geom, lap)
            mesh_copy = mesh
            kp, km = curv.principal_plus, curv.principal_minus
            quad = -(kp @ (lap.dirichlet @ kp) + km @ (lap.dirichlet @ km))
            return quad * float(np.sum(geom.face_area))

        assert smooth_val(cap) < 1e-3 * smooth_val(noisy)

    def test_nonnegative_on_pipeline_meshes(self):
        for z_maker in [lambda m: init_sphere_cap(m, 0.1),
                        lambda m: init_sphere_cap(m, 0.3)]:
            mesh = build_grid_mesh(15, UNIT)
            z = z_maker(mesh)
            geom = face_geometry(mesh, z)
            lap = laplacians(mesh, geom)
            curv = vertex_curvatures(mesh, geom, lap)
            mesh.z = z
            assert smoothness_loss(mesh, lap, curv) >= -1e-12


class TestTotalLossProperties:
    def make_setup(self, k=10, seed=0):
        mesh = build_grid_mesh(k, UNIT)
        g = toy_graph([("a", "b", 0.6), ("b", "c", -0.8), ("a", "c", 0.2)],
                      {"a": (0.25, 0.3), "b": (0.75, 0.3), "c": (0.5, 0.75)})
        rng = np.random.default_rng(seed)
        z = init_sphere_cap(mesh, 0.1) + 0.02 * rng.standard_normal(mesh.n_vertices)
        return mesh, g, z

    def test_total_identity(self):
        mesh, g, z = self.make_setup()
        mesh.z = z
        params = LossParams(epsilon_ms=1.0, lambda_smooth=0.37)
        report = total_loss_and_gradient(mesh, g, params)
        assert report.total == pytest.approx(
            report.curvature_loss + 0.37 * report.smoothness_loss, abs=1e-12)

    def test_lambda_linearity(self):
        mesh, g, z = self.make_setup()
        mesh.z = z
        r1 = total_loss_and_gradient(mesh, g, LossParams(epsilon_ms=1, lambda_smooth=0.001))
        r2 = total_loss_and_gradient(mesh, g, LossParams(epsilon_ms=1, lambda_smooth=0.002))
        assert r1.curvature_loss == pytest.approx(r2.curvature_loss, abs=1e-14)
        assert r1.smoothness_loss == pytest.approx(r2.smoothness_loss, abs=1e-14)
        assert r2.total == pytest.approx(r1.curvature_loss + 0.002 * r1.smoothness_loss,
                                         abs=1e-14)

    def test_vertical_translation_invariance(self):
        mesh, g, z = self.make_setup()
        params = LossParams(epsilon_ms=1.0, lambda_smooth=0.01)
        ev = LossEvaluator(mesh, g, params)
        r1 = ev.evaluate(z)
        r2 = ev.evaluate(z + 5.0)
        assert r2.total == pytest.approx(r1.total, abs=1e-10)

    def test_losses_nonnegative(self):
        mesh, g, z = self.make_setup()
        mesh.z = z
        report = total_loss_and_gradient(mesh, g, LossParams(epsilon_ms=1.0))
        assert report.curvature_loss >= 0.0
        assert report.smoothness_loss >= -1e-12

    @pytest.mark.parametrize("variant", ["length-weighted", "uniform"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_gradient_matches_finite_differences(self, variant, seed):
        mesh, g, z = self.make_setup(k=10, seed=seed)
        params = LossParams(epsilon_ms=1.0, lambda_smooth=0.001,
                            curvature_loss_variant=variant)
        ev = LossEvaluator(mesh, g, params)
        grad = ev.evaluate(z).gradient
        h = 1e-6
        rng = np.random.default_rng(seed + 100)
        sample = rng.choice(mesh.n_vertices, size=25, replace=False)
        for ell in sample:
            zp, zm = z.copy(), z.copy()
            zp[ell] += h
            zm[ell] -= h
            fd = (ev.evaluate(zp, with_gradient=False).total
                  - ev.evaluate(zm, with_gradient=False).total) / (2 * h)
            if abs(fd) < 1e-3:
                assert abs(grad[ell] - fd) < 1e-8
            else:
                assert abs(grad[ell] - fd) / abs(fd) < 1e-5
