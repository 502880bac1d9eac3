"""Independent brute-force oracles used by the test suite.

These deliberately avoid the library's own code paths: distances come from
Floyd-Warshall instead of BFS, and the minimum transport cost is found by
exhaustive search over integer-valued plans (the transportation polytope
with integral margins has integral vertices, so the search covers an
optimal vertex of the LP).
"""

from fractions import Fraction
from functools import lru_cache
from math import lcm


def floyd_warshall(vertices, edges):
    """All-pairs hop distances; 'inf' pairs are simply absent."""
    inf = float("inf")
    dist = {u: {w: (0 if u == w else inf) for w in vertices} for u in vertices}
    for u, w in edges:
        dist[u][w] = dist[w][u] = 1
    for k in vertices:
        dk = dist[k]
        for i in vertices:
            dik = dist[i][k]
            if dik == inf:
                continue
            di = dist[i]
            for j in vertices:
                alt = dik + dk[j]
                if alt < di[j]:
                    di[j] = alt
    return dist


def transport_cost_exact(row_masses, col_masses, cost):
    """Minimum transport cost between rational distributions, exactly.

    Scales by the common denominator D and searches integer tables with the
    given margins via memoized recursion over rows. Returns a Fraction.
    """
    rows = [Fraction(m) for m in row_masses]
    cols = [Fraction(m) for m in col_masses]
    assert sum(rows) == sum(cols) == 1
    denom = lcm(*[f.denominator for f in rows + cols])
    r = tuple(int(f * denom) for f in rows)
    c = tuple(int(f * denom) for f in cols)
    n_cols = len(c)

    @lru_cache(maxsize=None)
    def best(row_idx, remaining_cols):
        if row_idx == len(r):
            return 0 if all(x == 0 for x in remaining_cols) else None
        need = r[row_idx]
        best_cost = None

        def fill(j, left, cols_state, acc):
            nonlocal best_cost
            if j == n_cols:
                if left == 0:
                    rest = best(row_idx + 1, cols_state)
                    if rest is not None and (best_cost is None or acc + rest < best_cost):
                        best_cost = acc + rest
                return
            hi = min(left, cols_state[j])
            for x in range(hi + 1):
                nxt = cols_state[:j] + (cols_state[j] - x,) + cols_state[j + 1:]
                fill(j + 1, left - x, nxt, acc + x * cost[row_idx][j])

        fill(0, need, remaining_cols, 0)
        return best_cost

    total = best(0, c)
    assert total is not None, "margins admit no table"
    return Fraction(total, denom)


def ricci_oracle(vertices, edges, edge):
    """Exact Ollivier-Ricci curvature of an edge via the exhaustive plan
    search, as a Fraction."""
    adjacency = {v: set() for v in vertices}
    for u, w in edges:
        adjacency[u].add(w)
        adjacency[w].add(u)
    dist = floyd_warshall(vertices, edges)
    x, y = edge
    nx, ny = sorted(adjacency[x]), sorted(adjacency[y])
    row = [Fraction(1, len(nx))] * len(nx)
    col = [Fraction(1, len(ny))] * len(ny)
    cost = [[dist[a][b] for b in ny] for a in nx]
    assert all(all(c != float("inf") for c in rowc) for rowc in cost)
    return 1 - transport_cost_exact(row, col, cost)


def connected_labeled_graphs(n):
    """Yield edge sets of every connected labeled graph on vertices 0..n-1."""
    from itertools import combinations

    all_edges = list(combinations(range(n), 2))
    for bits in range(1 << len(all_edges)):
        edges = [e for i, e in enumerate(all_edges) if bits >> i & 1]
        adjacency = {v: set() for v in range(n)}
        for u, w in edges:
            adjacency[u].add(w)
            adjacency[w].add(u)
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w in adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) == n:
            yield edges
