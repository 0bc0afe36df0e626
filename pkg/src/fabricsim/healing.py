"""Per-root spanning arborescences and slot-by-slot local healing.

Every routable destination owns a spanning tree rooted at itself; traffic
follows parent pointers toward the root. When a parent link dies, the child
reselects a parent using only what its neighbors advertised over their links
in the previous slot (depth and attached/detached status). A neighbor that
advertised depth no greater than the child's own is provably not one of the
child's descendants, so switching to it is safe and completes in one slot.
When no such neighbor exists, detachment knowledge cascades down the
stranded subtree one hop per slot until some frontier cell finds a live
attached neighbor; a cell blocked for two consecutive slots widens its
candidate set to any attached-advertising neighbor.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .graphs import FabricGraph


class HardPartitionError(Exception):
    """Healing impossible: stranded cells have no surviving path to the root."""

    def __init__(self, root: int, stranded):
        self.root = root
        self.stranded = sorted(stranded)
        super().__init__(f"cells {self.stranded} cut off from root {root}")


@dataclass(frozen=True)
class Arborescence:
    """Spanning tree oriented toward a root cell.

    parent/parent_edge are -1 at the root; depth counts hops to the root.
    """

    root: int
    parent: tuple[int, ...]
    parent_edge: tuple[int, ...]
    depth: tuple[int, ...]

    def path_to_root(self, v: int) -> list[int]:
        path = [v]
        while path[-1] != self.root:
            path.append(self.parent[path[-1]])
        return path


def _bfs_depths(g: FabricGraph, root: int, alive_edges: set[int] | None) -> list[int]:
    depth = [-1] * g.num_vertices
    depth[root] = 0
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y, eid in g.adjacency[x]:
            if alive_edges is not None and eid not in alive_edges:
                continue
            if depth[y] < 0:
                depth[y] = depth[x] + 1
                queue.append(y)
    return depth


def build_rooted_tree(
    g: FabricGraph, root: int, alive_edges: set[int] | None = None
) -> Arborescence:
    """Breadth-first shortest-path tree toward `root`, lowest-id parent ties."""
    if not 0 <= root < g.num_vertices:
        raise ValueError(f"root {root} out of range")
    depth = _bfs_depths(g, root, alive_edges)
    unreachable = [v for v, d in enumerate(depth) if d < 0]
    if unreachable:
        raise ValueError(f"cells unreachable from root {root}: {unreachable}")
    parent = [-1] * g.num_vertices
    parent_edge = [-1] * g.num_vertices
    for v in range(g.num_vertices):
        if v == root:
            continue
        for y, eid in g.adjacency[v]:  # sorted by id, so first match is lowest
            if alive_edges is not None and eid not in alive_edges:
                continue
            if depth[y] == depth[v] - 1:
                parent[v] = y
                parent_edge[v] = eid
                break
    return Arborescence(root, tuple(parent), tuple(parent_edge), tuple(depth))


def validate_arborescence(
    g: FabricGraph, tree: Arborescence, alive_edges: set[int] | None = None
) -> list[str]:
    """Structural violations (empty list when the tree is valid)."""
    problems = []
    n = g.num_vertices
    for v in range(n):
        if v == tree.root:
            if tree.parent[v] != -1:
                problems.append(f"root {v} has a parent")
            continue
        p, eid = tree.parent[v], tree.parent_edge[v]
        if p < 0:
            problems.append(f"cell {v} has no parent")
            continue
        if set(g.edges[eid]) != {v, p}:
            problems.append(f"cell {v}: edge {eid} does not join {v} and {p}")
        if alive_edges is not None and eid not in alive_edges:
            problems.append(f"cell {v}: parent edge {eid} is dead")
    # acyclicity + depth consistency by walking every chain
    for v in range(n):
        seen = set()
        x = v
        while x != tree.root:
            if x in seen:
                problems.append(f"cycle through cell {x}")
                break
            seen.add(x)
            x = tree.parent[x]
            if x < 0:
                break
    for v in range(n):
        if v != tree.root and tree.parent[v] >= 0:
            if tree.depth[v] != tree.depth[tree.parent[v]] + 1:
                problems.append(f"cell {v}: depth inconsistent with parent")
    if tree.depth[tree.root] != 0:
        problems.append("root depth is not 0")
    return problems


def diameter(g: FabricGraph) -> int:
    """Longest shortest path, by all-pairs BFS."""
    best = 0
    for v in range(g.num_vertices):
        depth = _bfs_depths(g, v, None)
        if min(depth) < 0:
            raise ValueError("diameter undefined on a disconnected graph")
        best = max(best, max(depth))
    return best


def heal_time_bound(g: FabricGraph, delta: int = 1) -> int:
    """Worst-case healing bound: full tree reconstruction, diameter slots."""
    return diameter(g) * delta


class TreeProtocol:
    """Mutable healing state for one rooted tree, advanced one slot at a time.

    Cells act on advertised neighbor state only (one slot stale at worst).
    The would-be-cycle walk in the candidate filter stands in for the epoch
    discipline a real link protocol would carry in its advertisements.
    """

    FALLBACK_AFTER = 2  # blocked slots before widening beyond the depth rule
    _BLOCK_CAP = 3

    def __init__(self, g: FabricGraph, tree: Arborescence):
        self.g = g
        self.root = tree.root
        n = g.num_vertices
        self.parent = list(tree.parent)
        self.parent_edge = list(tree.parent_edge)
        self.depth = list(tree.depth)
        self.attached = [True] * n
        self.blocked = [0] * n
        self.adv_depth = list(tree.depth)
        self.adv_attached = [True] * n
        self.detached: set[int] = set()
        self.settled = True  # nothing to do until an edge changes state

    def on_edges_down(self, dead_edges: set[int]) -> None:
        """Parent-edge loss is known to both endpoints in the failing slot."""
        for v in range(self.g.num_vertices):
            if v != self.root and self.parent_edge[v] in dead_edges and self.attached[v]:
                self._detach(v)
        self.settled = False

    def on_edges_revived(self) -> None:
        self.settled = False
        for v in self.detached:
            self.blocked[v] = 0

    def _detach(self, v: int) -> None:
        self.attached[v] = False
        self.blocked[v] = 0
        self.detached.add(v)

    def healed(self, dead_cells: set[int] | None = None) -> bool:
        if not self.detached:
            return True
        if dead_cells:
            return self.detached <= dead_cells
        return False

    @property
    def stalled(self) -> bool:
        """Detached cells remain but no local rule can make progress."""
        return self.settled and bool(self.detached)

    def _would_cycle(self, candidate: int, v: int) -> bool:
        x = candidate
        while x != -1 and x != self.root:
            if x == v:
                return True
            x = self.parent[x]
        return False

    def heal_round(self, alive_edges: set[int], dead_cells: set[int] | None = None) -> bool:
        """One reconciliation slot of the healing protocol; True if state moved."""
        dead_cells = dead_cells or set()
        changed = False

        # detachment knowledge arrives from last slot's parent advertisement
        for v in range(self.g.num_vertices):
            if v == self.root or not self.attached[v]:
                continue
            p = self.parent[v]
            if p >= 0 and not self.adv_attached[p]:
                self._detach(v)
                changed = True

        for v in sorted(self.detached):
            if v in dead_cells:
                continue
            candidates = []
            widened = self.blocked[v] >= self.FALLBACK_AFTER
            for y, eid in self.g.adjacency[v]:
                if eid not in alive_edges or not self.adv_attached[y]:
                    continue
                if self.adv_depth[y] <= self.depth[v] or widened:
                    candidates.append((self.adv_depth[y], y, eid))
            candidates.sort()
            attached_now = False
            for ad, y, eid in candidates:
                if self._would_cycle(y, v):
                    continue
                self.parent[v] = y
                self.parent_edge[v] = eid
                self.depth[v] = ad + 1
                self.attached[v] = True
                self.blocked[v] = 0
                self.detached.discard(v)
                attached_now = True
                changed = True
                break
            if not attached_now and self.blocked[v] < self._BLOCK_CAP:
                self.blocked[v] += 1
                changed = True

        # attached cells keep re-selecting: switch to a strictly shallower
        # parent whenever a neighbor advertises one, so repeated faults do
        # not let the tree drift away from shortest paths
        for v in range(self.g.num_vertices):
            if v == self.root or not self.attached[v] or v in dead_cells:
                continue
            best = None
            for y, eid in self.g.adjacency[v]:
                if eid not in alive_edges or not self.adv_attached[y]:
                    continue
                if self.adv_depth[y] + 1 < self.depth[v]:
                    key = (self.adv_depth[y], y, eid)
                    if best is None or key < best:
                        best = key
            if best is not None and not self._would_cycle(best[1], v):
                self.parent[v] = best[1]
                self.parent_edge[v] = best[2]
                self.depth[v] = best[0] + 1
                changed = True

        # depth knowledge flows one hop per slot from parent advertisements
        for v in range(self.g.num_vertices):
            if v == self.root or not self.attached[v]:
                continue
            p = self.parent[v]
            if p >= 0 and self.adv_attached[p]:
                d = self.adv_depth[p] + 1
                if d != self.depth[v]:
                    self.depth[v] = d
                    changed = True

        # end-of-slot advertisements
        for v in range(self.g.num_vertices):
            if self.adv_depth[v] != self.depth[v] or self.adv_attached[v] != self.attached[v]:
                self.adv_depth[v] = self.depth[v]
                self.adv_attached[v] = self.attached[v]
                changed = True
        self.settled = not changed
        return changed

    def route_next(self, v: int) -> tuple[int, int] | None:
        """(next cell, edge id) toward the root, or None while detached."""
        if v == self.root or not self.attached[v]:
            return None
        return self.parent[v], self.parent_edge[v]

    def to_arborescence(self) -> Arborescence:
        """Snapshot with exact depths recomputed from the parent chains."""
        n = self.g.num_vertices
        depth = [-1] * n
        depth[self.root] = 0
        for v in range(n):
            chain = []
            x = v
            while depth[x] < 0:
                chain.append(x)
                x = self.parent[x]
                if x < 0:
                    raise ValueError(f"cell {chain[-1]} has no path to the root")
            d = depth[x]
            for c in reversed(chain):
                d += 1
                depth[c] = d
        return Arborescence(self.root, tuple(self.parent), tuple(self.parent_edge), tuple(depth))


def local_heal(
    tree: Arborescence, failed_edge: int, g: FabricGraph
) -> tuple[Arborescence, int]:
    """Heal one failed link by local parent reselection.

    Returns the repaired arborescence and the number of reconciliation slots
    it took. A failed link that was no cell's parent edge costs 0 slots.
    Raises HardPartitionError when the stranded cells are physically cut off.
    """
    if not 0 <= failed_edge < g.num_edges:
        raise ValueError(f"edge id {failed_edge} out of range")
    alive = set(range(g.num_edges)) - {failed_edge}
    if failed_edge not in tree.parent_edge:
        return tree, 0
    proto = TreeProtocol(g, tree)
    proto.on_edges_down({failed_edge})
    slots = 0
    while True:
        changed = proto.heal_round(alive)
        slots += 1
        if proto.healed():
            return proto.to_arborescence(), slots
        if not changed:
            raise HardPartitionError(tree.root, proto.detached)
        if slots > 4 * g.num_vertices:
            raise AssertionError("healing failed to terminate")
