"""Weighted-tree realization of a cell hierarchy.

Vertices are the cells of a finite metric space; each child hangs from its
parent by an edge whose length is the Hausdorff distance between the two
member sets.  Points of the tree are either vertices or interior points of
an edge, addressed by a fraction t in (0, 1) measured from the parent end.

The metric rho on the tree is not the shortest-path metric of the skeleton:
the distance between two vertices is defined directly as the Hausdorff
distance between their cells, a point inside an edge sits at arc-length
offsets t * length and (1 - t) * length from the edge's endpoints, and
distances between points on distinct edges take the cheapest of the four
endpoint combinations.  Distances between two points of one edge are plain
arc length.  Restricted to the singleton cells (the leaves), rho reproduces
the original point distances exactly, down to the same float operations.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .cells import CellHierarchy, DegenerateSpace, build_cell_hierarchy
from .errors import DendritesError
from .spaces import MetricSpace


class UnknownFormat(DendritesError):
    """Unsupported export format name."""


class MalformedDendrite(DendritesError):
    """A dendrite file or vertex/edge structure failed validation."""


@dataclass(frozen=True)
class Edge:
    """Skeleton edge from parent cell ``u`` to child cell ``v``."""

    u: int
    v: int
    length: float


@dataclass(frozen=True)
class DPoint:
    """A point of the dendrite: a vertex, or an edge interior point.

    Exactly one of ``vertex`` and ``edge`` is set.  For edge points,
    ``t`` in (0, 1) is the fraction from the parent endpoint; boundary
    fractions are normalized to the endpoint vertices on construction.
    """

    vertex: int | None = None
    edge: int | None = None
    t: float = 0.0

    def __post_init__(self):
        if (self.vertex is None) == (self.edge is None):
            raise MalformedDendrite("a DPoint is either a vertex or an edge point")
        if self.edge is not None and not 0.0 < self.t < 1.0:
            raise MalformedDendrite(f"edge fraction {self.t} outside (0, 1)")

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None


class Dendrite:
    """Tree of cells over a metric space, immutable after construction."""

    def __init__(self, space: MetricSpace, members, edges, root: int):
        self.space = space
        self.members: tuple[frozenset[int], ...] = tuple(frozenset(m) for m in members)
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.root = int(root)
        n = len(self.members)
        if not 0 <= self.root < n:
            raise MalformedDendrite("root is not a vertex")
        self.adjacency: tuple[tuple[tuple[int, int], ...], ...]
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for eid, e in enumerate(self.edges):
            if not (0 <= e.u < n and 0 <= e.v < n) or e.u == e.v:
                raise MalformedDendrite(f"edge {eid} endpoints invalid")
            adj[e.u].append((e.v, eid))
            adj[e.v].append((e.u, eid))
        self.adjacency = tuple(tuple(nbrs) for nbrs in adj)
        self._member_arrays = tuple(
            np.array(sorted(m), dtype=np.intp) for m in self.members
        )
        self._haus_cache: dict[tuple[int, int], float] = {}
        # parent/depth arrays from a BFS rooted at self.root, for path queries
        self.parent_vertex = [-1] * n
        self.parent_edge = [-1] * n
        self.depth = [0] * n
        seen = [False] * n
        seen[self.root] = True
        reached = 1
        queue = deque([self.root])
        while queue:
            v = queue.popleft()
            for w, eid in self.adjacency[v]:
                if not seen[w]:
                    seen[w] = True
                    reached += 1
                    self.parent_vertex[w] = v
                    self.parent_edge[w] = eid
                    self.depth[w] = self.depth[v] + 1
                    queue.append(w)
        self._connected = reached == n

    @property
    def n_vertices(self) -> int:
        return len(self.members)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def is_leaf(self, v: int) -> bool:
        return len(self.adjacency[v]) <= 1

    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.n_vertices) if self.is_leaf(v))

    def singleton_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.n_vertices) if len(self.members[v]) == 1)

    def hausdorff(self, u: int, v: int) -> float:
        """Hausdorff distance between the member sets of two vertices."""
        if u == v:
            return 0.0
        key = (u, v) if u < v else (v, u)
        cached = self._haus_cache.get(key)
        if cached is not None:
            return cached
        ia, ib = self._member_arrays[u], self._member_arrays[v]
        if len(ia) == 1 and len(ib) == 1:
            value = float(self.space.matrix[ia[0], ib[0]])
        else:
            sub = self.space.matrix[np.ix_(ia, ib)]
            value = float(max(sub.min(axis=1).max(), sub.min(axis=0).max()))
        self._haus_cache[key] = value
        return value

    def vertex_point(self, v: int) -> DPoint:
        if not 0 <= v < self.n_vertices:
            raise MalformedDendrite(f"no vertex {v}")
        return DPoint(vertex=v)

    def edge_point(self, edge_id: int, t: float) -> DPoint:
        """Point at fraction ``t`` along an edge; 0 and 1 become vertices."""
        if not 0 <= edge_id < self.n_edges:
            raise MalformedDendrite(f"no edge {edge_id}")
        if not 0.0 <= t <= 1.0:
            raise MalformedDendrite(f"edge fraction {t} outside [0, 1]")
        if t == 0.0:
            return DPoint(vertex=self.edges[edge_id].u)
        if t == 1.0:
            return DPoint(vertex=self.edges[edge_id].v)
        return DPoint(edge=edge_id, t=t)


def build_dendrite(hierarchy: CellHierarchy, space: MetricSpace | None = None) -> Dendrite:
    """Realize a cell hierarchy as a dendrite.

    One vertex per cell, one edge per parent/child pair, edge length equal
    to the Hausdorff distance between the two cells (always positive for a
    strict subset).
    """
    space = space if space is not None else hierarchy.space
    if space.size == 0:
        raise DegenerateSpace("cannot build a dendrite on zero points")
    members = [c.members for c in hierarchy.cells]
    dendrite = Dendrite(space, members, [], hierarchy.root)
    edges = []
    for cell in hierarchy.cells:
        if cell.parent is not None:
            length = dendrite.hausdorff(cell.parent, cell.index)
            edges.append(Edge(cell.parent, cell.index, length))
    return Dendrite(space, members, edges, hierarchy.root)


def dendrite_for_space(space: MetricSpace) -> Dendrite:
    """Convenience: hierarchy plus realization in one call."""
    return build_dendrite(build_cell_hierarchy(space), space)


def _legs(dendrite: Dendrite, p: DPoint) -> tuple[tuple[int, float], ...]:
    """(vertex, arc length to reach it) for each endpoint anchoring ``p``."""
    if p.vertex is not None:
        return ((p.vertex, 0.0),)
    e = dendrite.edges[p.edge]
    return ((e.u, p.t * e.length), (e.v, (1.0 - p.t) * e.length))


def rho(dendrite: Dendrite, a: DPoint, b: DPoint) -> float:
    """The dendrite metric between two points."""
    if a.vertex is not None and b.vertex is not None:
        return dendrite.hausdorff(a.vertex, b.vertex)
    if a.edge is not None and b.edge is not None and a.edge == b.edge:
        return abs(a.t - b.t) * dendrite.edges[a.edge].length
    # (la + lb) + H rather than la + H + lb: float addition commutes, so the
    # candidate values (and hence the min) are bitwise the same under swapping
    # a and b, keeping rho exactly symmetric.
    return min(
        (la + lb) + dendrite.hausdorff(va, vb)
        for va, la in _legs(dendrite, a)
        for vb, lb in _legs(dendrite, b)
    )


@dataclass(frozen=True)
class DendriteReport:
    """Outcome of :func:`verify_dendrite`; ``ok`` summarizes all checks."""

    endpoint_pairs: int
    isometry_error: float
    triangle_samples: int
    triangle_violations: int
    leaves_are_singletons: bool
    is_tree: bool

    @property
    def ok(self) -> bool:
        return (
            self.isometry_error == 0.0
            and self.triangle_violations == 0
            and self.leaves_are_singletons
            and self.is_tree
        )

    def to_json(self) -> dict:
        return {
            "endpoint_pairs": self.endpoint_pairs,
            "isometry_error": self.isometry_error,
            "triangle_samples": self.triangle_samples,
            "triangle_violations": self.triangle_violations,
            "leaves_are_singletons": self.leaves_are_singletons,
            "is_tree": self.is_tree,
            "ok": self.ok,
        }


def random_dpoint(dendrite: Dendrite, rng: np.random.Generator) -> DPoint:
    """A random vertex or edge-interior point, for sampling checks."""
    if dendrite.n_edges == 0 or rng.random() < 0.3:
        return DPoint(vertex=int(rng.integers(dendrite.n_vertices)))
    eid = int(rng.integers(dendrite.n_edges))
    t = float(rng.uniform(0.0, 1.0))
    while t == 0.0:  # keep strictly interior
        t = float(rng.uniform(0.0, 1.0))
    return DPoint(edge=eid, t=t)


def verify_dendrite(
    dendrite: Dendrite,
    *,
    triple_samples: int = 10_000,
    seed: int = 0,
    tol: float = 1e-12,
) -> DendriteReport:
    """Check the dendrite's defining properties.

    Exact endpoint isometry over all singleton-vertex pairs, the triangle
    inequality on sampled point triples (absolute tolerance ``tol``),
    leaves being exactly the singleton cells, and tree-ness of the skeleton.
    """
    singles = dendrite.singleton_vertices()
    err = 0.0
    pairs = 0
    matrix = dendrite.space.matrix
    for i, u in enumerate(singles):
        (pu,) = dendrite.members[u]
        for v in singles[i + 1 :]:
            (pv,) = dendrite.members[v]
            err = max(err, abs(dendrite.hausdorff(u, v) - float(matrix[pu, pv])))
            pairs += 1

    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(triple_samples):
        pa, pb, pc = (random_dpoint(dendrite, rng) for _ in range(3))
        dab, dbc, dac = rho(dendrite, pa, pb), rho(dendrite, pb, pc), rho(dendrite, pa, pc)
        if dac > dab + dbc + tol or dab > dac + dbc + tol or dbc > dab + dac + tol:
            violations += 1

    leaves = set(dendrite.leaves())
    return DendriteReport(
        endpoint_pairs=pairs,
        isometry_error=err,
        triangle_samples=triple_samples,
        triangle_violations=violations,
        leaves_are_singletons=leaves == set(singles),
        is_tree=dendrite._connected and dendrite.n_edges == dendrite.n_vertices - 1,
    )


def dendrite_to_json(dendrite: Dendrite) -> dict:
    return {
        "vertices": [
            {"id": v, "members": [dendrite.space.labels[p] for p in sorted(dendrite.members[v])]}
            for v in range(dendrite.n_vertices)
        ],
        "edges": [{"u": e.u, "v": e.v, "length": e.length} for e in dendrite.edges],
        "root": dendrite.root,
    }


def dendrite_from_json(data: Mapping, space: MetricSpace) -> Dendrite:
    """Rebuild a dendrite from its JSON form against the original space."""
    try:
        vertices = data["vertices"]
        edges = data["edges"]
        root = int(data["root"])
    except (KeyError, TypeError) as exc:
        raise MalformedDendrite(f"dendrite file missing field: {exc}") from exc
    index = {lab: i for i, lab in enumerate(space.labels)}
    ids = [int(v["id"]) for v in vertices]
    if sorted(ids) != list(range(len(ids))):
        raise MalformedDendrite("vertex ids must be 0..n-1")
    members: list[frozenset[int]] = [frozenset()] * len(ids)
    for v in vertices:
        try:
            members[int(v["id"])] = frozenset(index[lab] for lab in v["members"])
        except KeyError as exc:
            raise MalformedDendrite(f"unknown point label {exc} in dendrite file") from exc
    edge_objs = [Edge(int(e["u"]), int(e["v"]), float(e["length"])) for e in edges]
    return Dendrite(space, members, edge_objs, root)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_skeleton(dendrite: Dendrite, fmt: str = "json") -> str:
    """Serialize the skeleton as ``json`` or Graphviz ``dot`` text."""
    if fmt == "json":
        return json.dumps(dendrite_to_json(dendrite), indent=2, sort_keys=True)
    if fmt == "dot":
        lines = ["graph dendrite {"]
        for v in range(dendrite.n_vertices):
            label = "{" + ", ".join(dendrite.space.labels[p] for p in sorted(dendrite.members[v])) + "}"
            mark = " [root]" if v == dendrite.root else ""
            lines.append(f'  c{v} [label="{_dot_escape(label + mark)}"];')
        for e in dendrite.edges:
            lines.append(f'  c{e.u} -- c{e.v} [label="{e.length:.6g}", len="{e.length!r}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"
    raise UnknownFormat(f"unknown skeleton format {fmt!r}")
