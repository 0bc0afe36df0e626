"""Fabric topology construction.

A fabric is an undirected simple graph whose vertices are cells (dense
integers, lattice families numbered row-major) and whose edges are bilateral
links. Edge ids are positional indices into the edge tuple, so they are
stable under copy and identical for identical construction parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property


@dataclass(frozen=True)
class FabricGraph:
    """Undirected simple graph of cells and links."""

    num_vertices: int
    edges: tuple[tuple[int, int], ...]  # normalized (u < v); edge id = index
    name: str = "graph"

    def __post_init__(self) -> None:
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError(f"edge ({u},{v}) out of range")
            if u > v:
                raise ValueError(f"edge ({u},{v}) not normalized")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add((u, v))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def _edge_index(self) -> dict[tuple[int, int], int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per-vertex tuple of (neighbor, edge id), sorted by neighbor id."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.num_vertices)]
        for eid, (u, v) in enumerate(self.edges):
            adj[u].append((v, eid))
            adj[v].append((u, eid))
        return tuple(tuple(sorted(a)) for a in adj)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._edge_index

    def edge_id(self, u: int, v: int) -> int:
        return self._edge_index[(min(u, v), max(u, v))]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    def neighbors(self, v: int) -> list[int]:
        return [w for w, _ in self.adjacency[v]]

    def is_connected(self, alive_edges: set[int] | None = None) -> bool:
        """Connectivity, optionally restricted to a surviving edge set."""
        if self.num_vertices == 0:
            return True
        return len(self.component_of(0, alive_edges)) == self.num_vertices

    def component_of(self, start: int, alive_edges: set[int] | None = None) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y, eid in self.adjacency[x]:
                if alive_edges is not None and eid not in alive_edges:
                    continue
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen


def build_grid(m: int, n: int, name: str | None = None) -> FabricGraph:
    """m x n rectangular grid: vertices row-major, 4-neighbor adjacency."""
    if m < 1 or n < 1:
        raise ValueError("grid dimensions must be >= 1")
    edges = []
    for r in range(m):
        for c in range(n):
            v = r * n + c
            if c + 1 < n:
                edges.append((v, v + 1))
            if r + 1 < m:
                edges.append((v, v + n))
    return FabricGraph(m * n, tuple(edges), name or f"grid-{m}x{n}")


def build_octavalent_mesh(rows: int, cols: int, name: str | None = None) -> FabricGraph:
    """King-move lattice: interior valency 8, boundary 5, corners 3."""
    if rows < 2 or cols < 2:
        raise ValueError("mesh dimensions must be >= 2")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            # forward half of the king moves; each edge emitted exactly once
            for dr, dc in ((0, 1), (1, -1), (1, 0), (1, 1)):
                r2, c2 = r + dr, c + dc
                if 0 <= r2 < rows and 0 <= c2 < cols:
                    w = r2 * cols + c2
                    edges.append((min(v, w), max(v, w)))
    edges.sort()
    return FabricGraph(rows * cols, tuple(edges), name or f"mesh-{rows}x{cols}")


def build_chain(n: int, name: str | None = None) -> FabricGraph:
    """Path graph on n cells."""
    if n < 2:
        raise ValueError("chain needs at least 2 cells")
    return FabricGraph(n, tuple((i, i + 1) for i in range(n - 1)), name or f"chain-{n}")


def build_complete(n: int, name: str | None = None) -> FabricGraph:
    if n < 2:
        raise ValueError("complete graph needs at least 2 cells")
    edges = tuple((u, v) for u in range(n) for v in range(u + 1, n))
    return FabricGraph(n, edges, name or f"complete-{n}")


@dataclass(frozen=True)
class ClosLayout:
    """Vertex-id ranges of a three-tier Clos fabric."""

    tors: range
    leaves: range
    spines: range
    hosts: range
    hosts_per_rack: int

    def hosts_of_rack(self, rack: int) -> range:
        base = self.hosts.start + rack * self.hosts_per_rack
        return range(base, base + self.hosts_per_rack)


def build_clos(
    racks: int, leaves: int, spines: int, hosts_per_rack: int, name: str | None = None
) -> tuple[FabricGraph, ClosLayout]:
    """Three-tier Clos: hosts -> own ToR -> all leaves -> all spines.

    Vertex order: ToRs, then leaves, then spines, then hosts rack-major.
    """
    if min(racks, leaves, spines, hosts_per_rack) < 1:
        raise ValueError("all Clos tier counts must be >= 1")
    tors = range(0, racks)
    leaf_r = range(racks, racks + leaves)
    spine_r = range(racks + leaves, racks + leaves + spines)
    hosts = range(spine_r.stop, spine_r.stop + racks * hosts_per_rack)
    edges = []
    for t in tors:
        for lf in leaf_r:
            edges.append((t, lf))
    for lf in leaf_r:
        for s in spine_r:
            edges.append((lf, s))
    for rack in range(racks):
        for h in range(hosts_per_rack):
            edges.append((tors[rack], hosts.start + rack * hosts_per_rack + h))
    g = FabricGraph(hosts.stop, tuple(edges), name or f"clos-{racks}x{leaves}x{spines}x{hosts_per_rack}")
    return g, ClosLayout(tors, leaf_r, spine_r, hosts, hosts_per_rack)


def add_triangle_detour(g: FabricGraph, u: int, v: int, w: int) -> FabricGraph:
    """Add a two-hop alternate path u-w-v parallel to existing edge (u,v).

    w may be a new cell (id == num_vertices) or an existing one.
    """
    if not g.has_edge(u, v):
        raise ValueError(f"no base edge ({u},{v}) to detour around")
    n = g.num_vertices
    if w == n:
        n += 1
    elif not 0 <= w < n:
        raise ValueError(f"detour cell {w} is neither existing nor the next free id")
    edges = list(g.edges)
    for a, b in ((u, w), (w, v)):
        e = (min(a, b), max(a, b))
        if e not in edges:
            edges.append(e)
    return FabricGraph(n, tuple(edges), f"{g.name}+detour")


def laplacian(g: FabricGraph) -> list[list[int]]:
    """Graph Laplacian (degree matrix minus adjacency), exact integer entries."""
    n = g.num_vertices
    lap = [[0] * n for _ in range(n)]
    for u, v in g.edges:
        lap[u][u] += 1
        lap[v][v] += 1
        lap[u][v] -= 1
        lap[v][u] -= 1
    return lap


def to_edge_list_text(g: FabricGraph) -> str:
    """Serialize: first line "V E", then one "u v" line per edge, by edge id."""
    lines = [f"{g.num_vertices} {g.num_edges}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def from_edge_list_text(text: str, name: str = "graph") -> FabricGraph:
    rows = [ln for ln in (s.strip() for s in text.splitlines()) if ln]
    if not rows:
        raise ValueError("empty edge-list input")
    try:
        nv, ne = (int(tok) for tok in rows[0].split())
    except ValueError:
        raise ValueError(f"bad header line {rows[0]!r}, expected 'V E'") from None
    if len(rows) - 1 != ne:
        raise ValueError(f"header says {ne} edges, found {len(rows) - 1}")
    edges = []
    for ln in rows[1:]:
        u, v = (int(tok) for tok in ln.split())
        edges.append((min(u, v), max(u, v)))
    return FabricGraph(nv, tuple(edges), name)
