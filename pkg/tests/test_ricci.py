import itertools

import pytest

from latsurf.geo import GeoPoint
from latsurf.netgraph import DelayGraph, GraphEdge, VantagePoint
from latsurf.ricci import (
    DisconnectedSupportError,
    Distribution,
    curvature_graph,
    edge_curvature,
    uniform_neighbor_measure,
    wasserstein1,
)

from oracles import connected_labeled_graphs, ricci_oracle


def graph_from_edges(edges, n=None):
    names = sorted({v for e in edges for v in e}) if n is None else list(range(n))
    vertices = [VantagePoint(id=str(v), name=str(v), location=GeoPoint(0, 0))
                for v in names]
    graph_edges = [GraphEdge(u=str(u), v=str(w), residual_ms=0.0) for u, w in edges]
    return DelayGraph(vertices=vertices, edges=graph_edges, epsilon_ms=0.0)


def complete_graph(n):
    return graph_from_edges(list(itertools.combinations(range(n), 2)))


class TestWasserstein:
    def test_identical_distributions(self):
        g = complete_graph(4)
        mx = uniform_neighbor_measure(g, "0")
        cost, plan = wasserstein1(g, mx, mx)
        assert cost == pytest.approx(0.0, abs=1e-12)

    def test_unit_masses_adjacent(self):
        g = graph_from_edges([(0, 1)])
        cost, plan = wasserstein1(g, Distribution(("0",), (1.0,)),
                                  Distribution(("1",), (1.0,)))
        assert cost == pytest.approx(1.0, abs=1e-12)
        assert plan.entries == (("0", "1", 1.0),)

    def test_k4_edge_measures(self):
        g = complete_graph(4)
        cost, _ = wasserstein1(g, uniform_neighbor_measure(g, "0"),
                               uniform_neighbor_measure(g, "1"))
        assert cost == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_plan_marginals_match(self):
        g = complete_graph(5)
        mx = uniform_neighbor_measure(g, "0")
        my = uniform_neighbor_measure(g, "2")
        _, plan = wasserstein1(g, mx, my)
        row = {s: 0.0 for s in mx.support}
        col = {t: 0.0 for t in my.support}
        for s, t, m in plan.entries:
            row[s] += m
            col[t] += m
        for s, m in zip(mx.support, mx.mass):
            assert row[s] == pytest.approx(m, abs=1e-9)
        for t, m in zip(my.support, my.mass):
            assert col[t] == pytest.approx(m, abs=1e-9)

    def test_disconnected_supports(self):
        g = graph_from_edges([(0, 1), (2, 3)])
        with pytest.raises(DisconnectedSupportError):
            wasserstein1(g, uniform_neighbor_measure(g, "0"),
                         uniform_neighbor_measure(g, "2"))


class TestDistribution:
    def test_masses_must_sum_to_one(self):
        with pytest.raises(ValueError):
            Distribution(("a", "b"), (0.6, 0.6))

    def test_distinct_support(self):
        with pytest.raises(ValueError):
            Distribution(("a", "a"), (0.5, 0.5))


class TestEdgeCurvature:
    @pytest.mark.parametrize("n", range(3, 9))
    def test_complete_graph_closed_form(self, n):
        g = complete_graph(n)
        kappa = edge_curvature(g, ("0", "1"))
        assert kappa == pytest.approx((n - 2) / (n - 1), abs=1e-9)

    def test_path_interior_edge_flat(self):
        g = graph_from_edges([(0, 1), (1, 2), (2, 3)])
        assert edge_curvature(g, ("1", "2")) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("d", range(3, 7))
    def test_tree_bridge_closed_form(self, d):
        # Two internal vertices of degree d joined by an edge; leaves elsewhere.
        edges = [("x", "y")]
        edges += [("x", f"xl{i}") for i in range(d - 1)]
        edges += [("y", f"yl{i}") for i in range(d - 1)]
        g = graph_from_edges(edges)
        assert edge_curvature(g, ("x", "y")) == pytest.approx(-2.0 + 4.0 / d, abs=1e-9)

    def test_matches_exhaustive_oracle_small(self):
        for edges in connected_labeled_graphs(4):
            g = graph_from_edges(edges, n=4)
            for u, w in edges:
                expected = float(ricci_oracle(list(range(4)), edges, (u, w)))
                got = edge_curvature(g, (str(u), str(w)))
                assert got == pytest.approx(expected, abs=1e-9), (edges, (u, w))

    def test_bounds(self):
        for edges in connected_labeled_graphs(4):
            g = graph_from_edges(edges, n=4)
            for u, w in edges:
                kappa = edge_curvature(g, (str(u), str(w)))
                assert -2.0 - 1e-9 <= kappa <= 1.0 + 1e-9

    def test_shortcut_between_common_neighbors_never_decreases(self):
        # Ground distances can only shrink, so curvature can only grow.
        for edges in connected_labeled_graphs(5):
            adjacency = {v: set() for v in range(5)}
            for u, w in edges:
                adjacency[u].add(w)
                adjacency[w].add(u)
            for (x, y) in edges:
                common = adjacency[x] & adjacency[y]
                candidates = [(u, w) for u, w in itertools.combinations(sorted(common), 2)
                              if w not in adjacency[u]]
                if not candidates:
                    continue
                u, w = candidates[0]
                g_before = graph_from_edges(edges, n=5)
                g_after = graph_from_edges(edges + [(u, w)], n=5)
                before = edge_curvature(g_before, (str(x), str(y)))
                after = edge_curvature(g_after, (str(x), str(y)))
                assert after >= before - 1e-9


class TestCurvatureGraph:
    def test_empty_edge_set_unchanged(self):
        g = graph_from_edges([], n=3)
        out = curvature_graph(g)
        assert out.edges == []
        assert [v.id for v in out.vertices] == ["0", "1", "2"]

    def test_disjoint_k4s_per_component(self):
        edges = list(itertools.combinations(range(4), 2))
        edges += [(a + 4, b + 4) for a, b in itertools.combinations(range(4), 2)]
        g = graph_from_edges(edges)
        out = curvature_graph(g)
        assert len(out.edges) == 12
        for e in out.edges:
            assert e.ricci == pytest.approx(2.0 / 3.0, abs=1e-9)

    def test_three_cluster_bridges_negative(self):
        # Dense triangle-of-cliques with single bridges: bridge edges carry
        # negative curvature, intra-cluster edges positive.
        edges = []
        for c in range(3):
            base = c * 4
            edges += [(base + i, base + j) for i, j in itertools.combinations(range(4), 2)]
        bridges = [(0, 4), (5, 8), (9, 1)]
        edges += bridges
        out = curvature_graph(graph_from_edges(edges))
        bridge_set = {tuple(sorted((str(a), str(b)))) for a, b in bridges}
        for e in out.edges:
            if tuple(sorted((e.u, e.v))) in bridge_set:
                assert e.ricci < 0.0
            else:
                assert e.ricci > 0.0
