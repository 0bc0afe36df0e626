"""Edge-connectivity, disjoint spanning-tree packing, and disconnection probability.

Three routes to the disconnection probability of a fabric under independent
random link failures: exact enumeration over all failure subsets (small
graphs), seeded Monte Carlo (any size), and the analytic binomial bound
driven by the number of edge-disjoint spanning trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels
from .graphs import FabricGraph
from .spanning import SizeLimitError

EXACT_EDGE_LIMIT = 24
NASH_WILLIAMS_VERTEX_LIMIT = 12


@dataclass(frozen=True)
class DisjointTreePacking:
    """Pairwise edge-disjoint spanning trees, each a frozenset of edge ids."""

    trees: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.trees)


@dataclass(frozen=True)
class DisconnectionEstimate:
    probability: float
    method: str  # "exact-enumeration" | "monte-carlo" | "analytic-bound"
    p: float
    standard_error: float | None = None
    trials: int | None = None
    seed: int | None = None

    def csv_row(self, graph_name: str) -> list[str]:
        return [
            graph_name,
            self.method,
            str(self.p),
            str(self.probability),
            "" if self.standard_error is None else str(self.standard_error),
            "" if self.trials is None else str(self.trials),
            "" if self.seed is None else str(self.seed),
        ]


CSV_HEADER = ["graph", "method", "p", "probability", "stderr", "trials", "seed"]


def edge_connectivity(g: FabricGraph) -> int:
    """Global minimum edge cut (Stoer-Wagner with deterministic tie-breaks)."""
    n = g.num_vertices
    if n < 2:
        raise ValueError("edge connectivity needs at least 2 vertices")
    if not g.is_connected():
        return 0
    w = [[0] * n for _ in range(n)]
    for u, v in g.edges:
        w[u][v] += 1
        w[v][u] += 1
    active = list(range(n))
    best = math.inf
    while len(active) > 1:
        start = active[0]
        weight = {v: w[start][v] for v in active if v != start}
        order = [start]
        last_weight = 0
        while weight:
            # maximum adjacency; ties broken toward the lowest vertex id
            nxt = min(weight, key=lambda v: (-weight[v], v))
            last_weight = weight.pop(nxt)
            order.append(nxt)
            for v in weight:
                weight[v] += w[nxt][v]
        t = order[-1]
        s = order[-2]
        best = min(best, last_weight)
        for v in active:
            if v != s and v != t:
                w[s][v] += w[t][v]
                w[v][s] = w[s][v]
        active.remove(t)
    return int(best)


def _spans(g: FabricGraph, edge_ids) -> bool:
    parent = list(range(g.num_vertices))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = g.num_vertices
    for eid in edge_ids:
        u, v = g.edges[eid]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            comps -= 1
    return comps == 1


def greedy_disjoint_trees(g: FabricGraph) -> DisjointTreePacking:
    """Greedy packing of edge-disjoint spanning trees.

    Extraction heuristic: grow each tree Kruskal-style, always taking the
    residual edge whose consumption least threatens to strand a low-degree
    vertex - maximize (min endpoint residual degree, max endpoint residual
    degree), ties broken by lowest edge id. Extracted edges leave the
    residual pool; extraction repeats while the residual graph still spans.
    The packing size is a lower bound on the true maximum.
    """
    if not g.is_connected():
        raise ValueError("packing requires a connected graph")
    residual = set(range(g.num_edges))
    resdeg = g.degrees()
    trees: list[frozenset[int]] = []
    while _spans(g, residual):
        tree = _extract_tree(g, residual, resdeg)
        trees.append(frozenset(tree))
        residual -= tree
    return DisjointTreePacking(tuple(trees))


def _extract_tree(g: FabricGraph, residual: set[int], resdeg: list[int]) -> set[int]:
    parent = list(range(g.num_vertices))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree: set[int] = set()
    pool = sorted(residual)
    while len(tree) < g.num_vertices - 1:
        best_eid = -1
        best_key = None
        for eid in pool:
            u, v = g.edges[eid]
            if find(u) == find(v):
                continue
            du, dv = resdeg[u], resdeg[v]
            key = (min(du, dv), max(du, dv), -eid)
            if best_key is None or key > best_key:
                best_key = key
                best_eid = eid
        if best_eid < 0:
            raise AssertionError("residual stopped spanning mid-extraction")
        u, v = g.edges[best_eid]
        parent[find(u)] = find(v)
        resdeg[u] -= 1
        resdeg[v] -= 1
        tree.add(best_eid)
        pool.remove(best_eid)
    return tree


def _partitions(n: int):
    """All set partitions of range(n) as block-assignment lists (restricted growth)."""
    assignment = [0] * n
    maxes = [0] * n

    def rec(i: int):
        if i == n:
            yield assignment
            return
        top = maxes[i - 1] if i > 0 else -1
        for b in range(top + 2):
            assignment[i] = b
            maxes[i] = max(top, b)
            yield from rec(i + 1)

    yield from rec(0)


def nash_williams_exact(g: FabricGraph, limit: int = NASH_WILLIAMS_VERTEX_LIMIT) -> int:
    """Maximum number of edge-disjoint spanning trees, by partition enumeration.

    Minimizes floor(crossing-edges / (blocks - 1)) over every partition of the
    vertex set into >= 2 blocks. Exponential in |V|, hence the size limit.
    """
    n = g.num_vertices
    if n > limit:
        raise SizeLimitError(f"{n} vertices exceeds partition-enumeration limit {limit}")
    if n < 2:
        raise ValueError("needs at least 2 vertices")
    if not g.is_connected():
        return 0
    best = math.inf
    edges = g.edges
    for assign in _partitions(n):
        nblocks = max(assign) + 1
        if nblocks < 2:
            continue
        crossing = 0
        for u, v in edges:
            if assign[u] != assign[v]:
                crossing += 1
        best = min(best, crossing // (nblocks - 1))
        if best == 0:
            break
    return int(best)


def surviving_tree_exists(
    packing: DisjointTreePacking, failed: set[int]
) -> tuple[bool, int | None]:
    """First tree in the packing untouched by the failed edge set, if any.

    Guaranteed to exist whenever len(failed) < len(packing): each failed edge
    can knock out at most one tree of an edge-disjoint packing.
    """
    for i, tree in enumerate(packing.trees):
        if not (tree & failed):
            return True, i
    return False, None


def disconnection_counts(g: FabricGraph, limit: int = EXACT_EDGE_LIMIT) -> list[int]:
    """counts[k] = number of k-edge failure sets disconnecting g (exact integers)."""
    if g.num_edges > limit:
        raise SizeLimitError(f"{g.num_edges} edges exceeds enumeration limit {limit}")
    return _kernels.disconnection_counts(g.num_vertices, g.edges)


def disconnection_prob_exact(
    g: FabricGraph, p: float, limit: int = EXACT_EDGE_LIMIT
) -> DisconnectionEstimate:
    """Exact disconnection probability under independent edge failure prob p.

    Sums p^k (1-p)^(E-k) over the exact per-cardinality counts of
    disconnecting failure sets, so precision is limited only by the float
    evaluation of the final polynomial, not by enumeration order.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    counts = disconnection_counts(g, limit)
    ne = g.num_edges
    terms = []
    for k, c in enumerate(counts):
        if c == 0:
            continue
        if p == 0.0:
            continue
        if p == 1.0:
            if k == ne:
                terms.append(float(c))
            continue
        terms.append(c * math.exp(k * math.log(p) + (ne - k) * math.log1p(-p)))
    prob = min(1.0, max(0.0, math.fsum(terms)))
    return DisconnectionEstimate(probability=prob, method="exact-enumeration", p=p)


def disconnection_prob_mc(
    g: FabricGraph, p: float, trials: int, seed: int
) -> DisconnectionEstimate:
    """Monte Carlo disconnection estimate; reproducible for a given seed."""
    if trials < 1:
        raise ValueError("needs at least one trial")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    failures = _kernels.disconnection_mc(g.num_vertices, g.edges, p, trials, seed)
    est = failures / trials
    stderr = math.sqrt(est * (1.0 - est) / trials)
    return DisconnectionEstimate(
        probability=est,
        method="monte-carlo",
        p=p,
        standard_error=stderr,
        trials=trials,
        seed=seed,
    )


def disconnection_bound(num_edges: int, k: int, p: float) -> float:
    """Analytic bound C(E,k) p^k on disconnection probability, clamped to 1.

    k is the number of edge-disjoint spanning trees (disconnection requires at
    least one failure in every tree, hence at least k failures). Evaluated in
    the log domain so tiny p does not underflow the binomial prefactor.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0:
        return 0.0
    log_val = math.log(math.comb(num_edges, k)) + k * math.log(p)
    if log_val >= 0.0:
        return 1.0
    return math.exp(log_val)
