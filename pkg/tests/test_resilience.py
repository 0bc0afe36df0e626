import math
from collections import deque

import numpy as np
import pytest

from fabricsim.graphs import (
    FabricGraph,
    build_chain,
    build_complete,
    build_grid,
    build_octavalent_mesh,
)
from fabricsim.resilience import (
    CSV_HEADER,
    DisconnectionEstimate,
    disconnection_bound,
    disconnection_counts,
    disconnection_prob_exact,
    disconnection_prob_mc,
    edge_connectivity,
    greedy_disjoint_trees,
    nash_williams_exact,
    surviving_tree_exists,
)
from fabricsim.spanning import SizeLimitError

# -- max-flow oracle for Menger's theorem --------------------------------------


def max_flow_unit(g, s, t):
    """Edmonds-Karp with unit capacities on both edge directions."""
    cap = {}
    for u, v in g.edges:
        cap[(u, v)] = cap.get((u, v), 0) + 1
        cap[(v, u)] = cap.get((v, u), 0) + 1
    flow = 0
    while True:
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            x = queue.popleft()
            for y in g.neighbors(x):
                if y not in parent and cap.get((x, y), 0) > 0:
                    parent[y] = x
                    queue.append(y)
        if t not in parent:
            return flow
        y = t
        while parent[y] is not None:
            x = parent[y]
            cap[(x, y)] -= 1
            cap[(y, x)] = cap.get((y, x), 0) + 1
            y = x
        flow += 1


def menger_connectivity(g):
    return min(
        max_flow_unit(g, 0, t) for t in range(1, g.num_vertices)
    )


# -- edge connectivity ----------------------------------------------------------


def test_tree_connectivity_is_one():
    assert edge_connectivity(build_chain(10)) == 1


def test_grid_3x3_connectivity_is_two():
    assert edge_connectivity(build_grid(3, 3)) == 2


def test_k4_connectivity_is_three():
    assert edge_connectivity(build_complete(4)) == 3


def test_mesh_connectivity_is_corner_degree():
    assert edge_connectivity(build_octavalent_mesh(3, 3)) == 3
    assert edge_connectivity(build_octavalent_mesh(4, 5)) == 3


def test_disconnected_graph_has_zero_connectivity():
    assert edge_connectivity(FabricGraph(4, ((0, 1), (2, 3)))) == 0


def test_connectivity_matches_menger_max_flow():
    rng = np.random.Generator(np.random.PCG64(7))
    for _ in range(25):
        n = int(rng.integers(3, 8))
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        keep = [p for p in pairs if rng.random() < 0.6]
        g = FabricGraph(n, tuple(sorted(keep)))
        if not g.is_connected() or g.num_vertices < 2:
            continue
        assert edge_connectivity(g) == menger_connectivity(g)


# -- disjoint spanning-tree packing ----------------------------------------------


def packing_is_valid(g, packing):
    seen = set()
    for tree in packing.trees:
        if len(tree) != g.num_vertices - 1:
            return False
        if tree & seen:
            return False  # shares an edge with an earlier tree
        seen |= tree
        parent = list(range(g.num_vertices))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for eid in tree:
            u, v = g.edges[eid]
            ru, rv = find(u), find(v)
            if ru == rv:
                return False  # cycle
            parent[ru] = rv
    return True


def test_chain_packs_exactly_one_tree():
    packing = greedy_disjoint_trees(build_chain(10))
    assert len(packing) == 1
    assert packing_is_valid(build_chain(10), packing)


def test_k4_packs_two_trees():
    g = build_complete(4)
    packing = greedy_disjoint_trees(g)
    assert len(packing) == 2
    assert packing_is_valid(g, packing)


def test_mesh_3x3_packs_two_trees():
    g = build_octavalent_mesh(3, 3)
    packing = greedy_disjoint_trees(g)
    assert len(packing) >= 2
    assert packing_is_valid(g, packing)


def test_grid_3x3_packs_one_tree():
    # two disjoint spanning trees would need 16 edges; the grid has 12
    g = build_grid(3, 3)
    packing = greedy_disjoint_trees(g)
    assert len(packing) == 1
    assert packing_is_valid(g, packing)


@pytest.mark.parametrize(
    "g",
    [build_chain(6), build_grid(3, 3), build_complete(4), build_complete(5), build_octavalent_mesh(3, 3)],
)
def test_packing_size_never_exceeds_connectivity(g):
    assert len(greedy_disjoint_trees(g)) <= edge_connectivity(g)


def test_nash_williams_values():
    assert nash_williams_exact(build_chain(6)) == 1
    assert nash_williams_exact(build_complete(4)) == 2
    assert nash_williams_exact(build_octavalent_mesh(3, 3)) == 2
    # the honest value for the 3x3 grid: 12 edges cannot hold two 8-edge trees
    assert nash_williams_exact(build_grid(3, 3)) == 1


def test_nash_williams_greedy_agreement():
    for g in (build_chain(5), build_complete(4), build_grid(2, 3), build_octavalent_mesh(3, 3)):
        assert len(greedy_disjoint_trees(g)) <= nash_williams_exact(g)


def test_nash_williams_size_limit():
    with pytest.raises(SizeLimitError):
        nash_williams_exact(build_grid(4, 4))


def test_surviving_tree_basics():
    g = build_complete(4)
    packing = greedy_disjoint_trees(g)
    assert len(packing) == 2
    ok, idx = surviving_tree_exists(packing, set())
    assert ok and idx == 0
    eid = next(iter(packing.trees[0]))
    ok, idx = surviving_tree_exists(packing, {eid})
    assert ok and idx == 1
    adversarial = {next(iter(t)) for t in packing.trees}
    ok, idx = surviving_tree_exists(packing, adversarial)
    assert not ok and idx is None


def test_survivability_under_random_small_failures():
    rng = np.random.Generator(np.random.PCG64(11))
    for g in (build_complete(4), build_octavalent_mesh(3, 3)):
        packing = greedy_disjoint_trees(g)
        k = len(packing)
        assert k >= 2
        for _ in range(1000):
            size = int(rng.integers(0, k))  # |F| < k
            failed = set(rng.choice(g.num_edges, size=size, replace=False).tolist())
            ok, _ = surviving_tree_exists(packing, failed)
            assert ok


# -- disconnection probability ------------------------------------------------------


def test_chain_exact_matches_closed_form():
    g = build_chain(10)
    p = 1e-6
    est = disconnection_prob_exact(g, p)
    assert est.method == "exact-enumeration"
    assert abs(est.probability - (1 - (1 - p) ** 9)) < 1e-15
    assert abs(est.probability - 9e-6) < 1e-9


def test_grid_exact_at_tiny_p():
    g = build_grid(3, 3)
    p = 1e-6
    est = disconnection_prob_exact(g, p)
    counts = disconnection_counts(g)
    assert counts[0] == counts[1] == 0  # edge connectivity 2
    assert counts[2] == 4  # the four corner cuts
    assert est.probability <= 66e-12
    assert math.isclose(est.probability, counts[2] * p**2, rel_tol=1e-4)


def test_exact_edge_cases():
    g = build_grid(2, 2)
    assert disconnection_prob_exact(g, 0.0).probability == 0.0
    assert disconnection_prob_exact(g, 1.0).probability == 1.0


def test_exact_respects_edge_limit():
    with pytest.raises(SizeLimitError):
        disconnection_prob_exact(build_octavalent_mesh(4, 4), 0.01)


def test_mc_reproducible_and_near_exact():
    g = build_grid(3, 3)
    a = disconnection_prob_mc(g, 0.05, 100_000, 9)
    b = disconnection_prob_mc(g, 0.05, 100_000, 9)
    assert a == b
    exact = disconnection_prob_exact(g, 0.05).probability
    assert abs(a.probability - exact) <= 4 * a.standard_error
    assert math.isclose(
        a.standard_error, math.sqrt(a.probability * (1 - a.probability) / a.trials)
    )


def test_mc_certain_disconnection():
    est = disconnection_prob_mc(build_chain(4), 1.0, 500, 3)
    assert est.probability == 1.0


def test_bound_values():
    assert math.isclose(disconnection_bound(12, 2, 1e-6), 66e-12, rel_tol=1e-9)
    assert math.isclose(disconnection_bound(9, 1, 1e-3), 9e-3, rel_tol=1e-12)
    assert disconnection_bound(10, 2, 0.0) == 0.0
    assert disconnection_bound(10, 2, 1.0) == 1.0
    # far below double underflow without the log-domain evaluation
    assert disconnection_bound(712, 4, 1e-80) > 0.0


def test_bound_soundness_sweep():
    graphs = [build_chain(10), build_grid(3, 3), build_complete(4), build_octavalent_mesh(3, 3)]
    for g in graphs:
        k = len(greedy_disjoint_trees(g))
        for p in (0.1, 0.01, 0.001):
            exact = disconnection_prob_exact(g, p).probability
            assert exact <= disconnection_bound(g.num_edges, k, p) + 1e-15


def test_chain_vs_grid_reliability_gap():
    p = 1e-6
    chain = disconnection_prob_exact(build_chain(10), p).probability
    grid = disconnection_prob_exact(build_grid(3, 3), p).probability
    assert chain / grid >= 1e4


def test_estimate_csv_row():
    est = DisconnectionEstimate(0.5, "monte-carlo", 0.1, standard_error=0.01, trials=100, seed=7)
    row = est.csv_row("grid-3x3")
    assert len(row) == len(CSV_HEADER)
    assert row[0] == "grid-3x3"
    assert row[1] == "monte-carlo"
    assert row[5] == "100"
