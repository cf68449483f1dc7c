"""Cells of a finite metric space and their merge hierarchy.

Two points are chain-connected at threshold theta if a finite chain of
points joins them with consecutive distances at most theta (non-strict).
The equivalence classes are the theta-cells: the connected components of
the graph with an edge wherever d <= theta.  Sweeping theta upward from 0
yields a nested family of partitions whose distinct classes form a rooted
merge tree; that tree is exactly single-linkage clustering, so it is built
from a minimum spanning tree processed in order of edge weight.

Threshold comparisons use the stored distances exactly; edges of equal
weight that join several components at the same theta produce a single
cell with all of them as children.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree

from .errors import DendritesError
from .spaces import BadParams, MetricSpace


class DegenerateSpace(DendritesError):
    """The operation needs at least one point."""


@dataclass(frozen=True)
class Cell:
    """One node of the merge hierarchy.

    ``birth_threshold`` is the smallest theta at which the member set is a
    theta-cell; it is 0 for singletons and the joining edge weight
    otherwise.  ``children`` are the maximal proper subcells.
    """

    index: int
    members: frozenset[int]
    birth_threshold: float
    parent: int | None
    children: tuple[int, ...]

    @property
    def is_singleton(self) -> bool:
        return len(self.members) == 1


@dataclass(frozen=True)
class CellHierarchy:
    """All distinct cells of a space, singletons first, root last."""

    space: MetricSpace
    cells: tuple[Cell, ...]
    root: int

    def singleton(self, point: int) -> int:
        """Cell index of the singleton {point}; equal to the point index."""
        return point

    def member_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(c.members for c in self.cells)


def chain_connected(space: MetricSpace, x: int, y: int, theta: float) -> bool:
    """Is there a chain from x to y with consecutive distances <= theta?"""
    if not (0 <= x < space.size and 0 <= y < space.size):
        raise BadParams(f"point index out of range: {x}, {y}")
    if x == y:
        return True
    if theta < 0:
        return False
    m = space.matrix
    n = space.size
    seen = np.zeros(n, dtype=bool)
    seen[x] = True
    queue = deque([x])
    while queue:
        v = queue.popleft()
        for w in np.nonzero(m[v] <= theta)[0]:
            if not seen[w]:
                if w == y:
                    return True
                seen[w] = True
                queue.append(int(w))
    return False


def cells_at_threshold(space: MetricSpace, theta: float) -> tuple[frozenset[int], ...]:
    """The partition into theta-cells, ordered by smallest member."""
    m = space.matrix
    n = space.size
    adj = m <= theta
    seen = np.zeros(n, dtype=bool)
    parts: list[frozenset[int]] = []
    for start in range(n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in np.nonzero(adj[v] & ~seen)[0]:
                seen[w] = True
                comp.append(int(w))
                queue.append(int(w))
        parts.append(frozenset(comp))
    return tuple(parts)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, v: int) -> int:
        p = self.parent
        while p[v] != v:
            p[v] = p[p[v]]
            v = p[v]
        return v

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def build_cell_hierarchy(space: MetricSpace) -> CellHierarchy:
    """Merge tree of all distinct cells across every threshold.

    Works on a minimum spanning tree of the complete distance graph: the
    components of the subgraph with edges <= theta match the theta-cells,
    so sweeping the MST edges by increasing weight visits every merge.
    Edges are grouped by exactly equal weight; each group turns the prior
    components it connects into one new multi-child cell.
    """
    n = space.size
    if n == 0:
        raise DegenerateSpace("cell hierarchy needs at least one point")

    members: list[frozenset[int]] = [frozenset([i]) for i in range(n)]
    births: list[float] = [0.0] * n
    children: list[tuple[int, ...]] = [()] * n
    parents: list[int | None] = [None] * n

    if n == 1:
        cells = tuple(
            Cell(i, members[i], births[i], parents[i], children[i]) for i in range(len(members))
        )
        return CellHierarchy(space, cells, 0)

    mst = minimum_spanning_tree(space.matrix).tocoo()
    order = np.argsort(mst.data, kind="stable")
    edges = [(float(mst.data[e]), int(mst.row[e]), int(mst.col[e])) for e in order]

    uf = _UnionFind(n)
    live: dict[int, int] = {i: i for i in range(n)}  # union-find root -> cell index
    pos = 0
    while pos < len(edges):
        w = edges[pos][0]
        group_end = pos
        while group_end < len(edges) and edges[group_end][0] == w:
            uf.union(edges[group_end][1], edges[group_end][2])
            group_end += 1
        pos = group_end
        merged: dict[int, list[int]] = {}
        for root, cell in live.items():
            merged.setdefault(uf.find(root), []).append(cell)
        live = {}
        for root, cell_ids in merged.items():
            if len(cell_ids) == 1:
                live[root] = cell_ids[0]
                continue
            cell_ids.sort()
            new_id = len(members)
            members.append(frozenset().union(*(members[c] for c in cell_ids)))
            births.append(w)
            children.append(tuple(cell_ids))
            parents.append(None)
            for c in cell_ids:
                parents[c] = new_id
            live[root] = new_id

    cells = tuple(
        Cell(i, members[i], births[i], parents[i], children[i]) for i in range(len(members))
    )
    return CellHierarchy(space, cells, len(members) - 1)
