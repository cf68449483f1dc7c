"""Extending endpoint dynamics over the whole dendrite.

Given any map of the leaves into themselves, this module produces a map of
the entire dendrite that agrees with it on the leaves and sends every
interior point to the filtration root after finitely many steps.

The construction enumerates the interior (non-leaf) vertices breadth-first
from a chosen root p0, so that the path from p0 to each p_i runs through
earlier vertices only.  T_i denotes the subtree spanned by p0..p_i; the arc
alpha_i added at stage i is the skeleton edge joining p_i to its already
enumerated neighbor p_j(i).  Stage images q_i are obtained by mapping the
leaf nearest to p_i (in the dendrite metric rho, smallest vertex id on
ties) through the endpoint map and retracting the result onto T_{i-1}; the
retraction of a vertex x is the first vertex of T_{i-1} on the path from x
toward p0.  Each alpha_i then maps arc-length-linearly onto the tree path
from q_j(i) to q_i, which lies inside T_{i-1}; when that path degenerates
to a point the whole arc collapses onto it.

Edges that end in a leaf belong to no alpha_i.  Their interior points all
map to the image of the interior endpoint, which keeps every interior
point of the dendrite on the descending staircase T_i -> T_{i-1} -> ... ->
{p0} while the leaves themselves follow the endpoint map.
"""
from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dendrite import Dendrite, DPoint, build_dendrite
from .cells import build_cell_hierarchy
from .errors import DendritesError
from .spaces import MetricSpace


class RootIsLeaf(DendritesError):
    """The filtration root must be an interior vertex."""


class NotEndpointMap(DendritesError):
    """The supplied endpoint map is not a self-map of the leaves."""


@dataclass(frozen=True)
class Filtration:
    """Breadth-first enumeration p0..pm of the interior vertices.

    ``order[i]`` is p_i; ``arc_parent[i]`` is the order index j(i) of the
    neighbor through which p_i attached (-1 for the root).  ``pos`` maps a
    vertex id to its order index, -1 for leaves.  ``toward_root`` gives,
    for every vertex of the dendrite, the next vertex on the path to p0.
    """

    dendrite: Dendrite
    order: tuple[int, ...]
    arc_parent: tuple[int, ...]
    pos: tuple[int, ...]
    toward_root: tuple[int, ...]

    @property
    def root(self) -> int:
        return self.order[0]

    def arcs(self) -> tuple[tuple[int, int], ...]:
        """The arcs alpha_i as (p_j(i), p_i) vertex pairs, i >= 1."""
        return tuple(
            (self.order[self.arc_parent[i]], self.order[i]) for i in range(1, len(self.order))
        )


def build_filtration(dendrite: Dendrite, root: int | None = None) -> Filtration:
    """Enumerate interior vertices breadth-first from ``root``.

    ``root`` defaults to the dendrite's own root (the whole-space cell).
    """
    p0 = dendrite.root if root is None else int(root)
    if dendrite.is_leaf(p0):
        raise RootIsLeaf(f"vertex {p0} is a leaf and cannot seed the filtration")

    n = dendrite.n_vertices
    toward_root = [-1] * n
    seen = [False] * n
    seen[p0] = True
    queue = deque([p0])
    while queue:
        v = queue.popleft()
        for w, _ in dendrite.adjacency[v]:
            if not seen[w]:
                seen[w] = True
                toward_root[w] = v
                queue.append(w)

    order: list[int] = [p0]
    arc_parent: list[int] = [-1]
    pos = [-1] * n
    pos[p0] = 0
    queue = deque([p0])
    while queue:
        v = queue.popleft()
        for w, _ in dendrite.adjacency[v]:
            if pos[w] < 0 and not dendrite.is_leaf(w):
                pos[w] = len(order)
                arc_parent.append(pos[v])
                order.append(w)
                queue.append(w)

    return Filtration(dendrite, tuple(order), tuple(arc_parent), tuple(pos), tuple(toward_root))


def _tree_path(dendrite: Dendrite, a: int, b: int) -> tuple[list[int], list[int]]:
    """Vertices and edge ids of the unique path from a to b."""
    up_a: list[int] = [a]
    up_b: list[int] = [b]
    ea: list[int] = []
    eb: list[int] = []
    da, db = dendrite.depth[a], dendrite.depth[b]
    while da > db:
        ea.append(dendrite.parent_edge[up_a[-1]])
        up_a.append(dendrite.parent_vertex[up_a[-1]])
        da -= 1
    while db > da:
        eb.append(dendrite.parent_edge[up_b[-1]])
        up_b.append(dendrite.parent_vertex[up_b[-1]])
        db -= 1
    while up_a[-1] != up_b[-1]:
        ea.append(dendrite.parent_edge[up_a[-1]])
        up_a.append(dendrite.parent_vertex[up_a[-1]])
        eb.append(dendrite.parent_edge[up_b[-1]])
        up_b.append(dendrite.parent_vertex[up_b[-1]])
    vertices = up_a + up_b[-2::-1]
    edges = ea + eb[::-1]
    return vertices, edges


@dataclass(frozen=True)
class ArcTarget:
    """A materialized tree path with cumulative arc lengths."""

    vertices: tuple[int, ...]
    edge_ids: tuple[int, ...]
    cum: tuple[float, ...]

    @property
    def total(self) -> float:
        return self.cum[-1]

    def point_at(self, dendrite: Dendrite, s: float) -> DPoint:
        """Point at arc-length fraction ``s`` from the first path vertex."""
        if self.total == 0.0 or s <= 0.0:
            return DPoint(vertex=self.vertices[0])
        if s >= 1.0:
            return DPoint(vertex=self.vertices[-1])
        target = s * self.total
        if target >= self.total:
            return DPoint(vertex=self.vertices[-1])
        k = bisect.bisect_right(self.cum, target) - 1
        k = min(k, len(self.edge_ids) - 1)
        seg = self.cum[k + 1] - self.cum[k]
        local = (target - self.cum[k]) / seg
        edge = dendrite.edges[self.edge_ids[k]]
        t = local if edge.u == self.vertices[k] else 1.0 - local
        return dendrite.edge_point(self.edge_ids[k], min(max(t, 0.0), 1.0))


def _arc_target(dendrite: Dendrite, a: int, b: int) -> ArcTarget:
    vertices, edge_ids = _tree_path(dendrite, a, b)
    cum = [0.0]
    for eid in edge_ids:
        cum.append(cum[-1] + dendrite.edges[eid].length)
    return ArcTarget(tuple(vertices), tuple(edge_ids), tuple(cum))


@dataclass(frozen=True)
class DendriteMap:
    """A self-map of the dendrite extending an endpoint map.

    ``vertex_images[i]`` is q_i for the i-th filtration vertex;
    ``arc_targets[i]`` is the path [q_j(i), q_i] carrying arc alpha_i
    (entry 0 is None).  ``edge_roles`` records, per skeleton edge, either
    ("arc", i, from_u) for an interior arc traversed from its u endpoint,
    or ("leaf", q) for a leaf edge whose interior collapses to vertex q.
    """

    dendrite: Dendrite
    filtration: Filtration
    endpoint_images: tuple[tuple[int, int], ...]
    vertex_images: tuple[int, ...]
    arc_targets: tuple[ArcTarget | None, ...]
    edge_roles: tuple[tuple, ...]

    def endpoint_image(self, leaf: int) -> int:
        return dict(self.endpoint_images)[leaf]


def extend_map(
    dendrite: Dendrite,
    filtration: Filtration,
    endpoint_images: Mapping[int, int],
) -> DendriteMap:
    """Extend a leaf self-map over the dendrite.

    ``endpoint_images`` maps every leaf vertex id to a leaf vertex id.
    """
    leaves = dendrite.leaves()
    leaf_set = set(leaves)
    f = {}
    for leaf in leaves:
        if leaf not in endpoint_images:
            raise NotEndpointMap(f"no image for leaf {leaf}")
        img = int(endpoint_images[leaf])
        if img not in leaf_set:
            raise NotEndpointMap(f"image {img} of leaf {leaf} is not a leaf")
        f[leaf] = img
    for key in endpoint_images:
        if int(key) not in leaf_set:
            raise NotEndpointMap(f"{key} is not a leaf")

    order = filtration.order
    matrix = dendrite.space.matrix
    leaf_points = np.array([min(dendrite.members[v]) for v in leaves], dtype=np.intp)

    # q_0 = p_0; later stages retract the mapped nearest leaf onto T_{i-1}.
    vertex_images = [order[0]]
    in_t = [False] * dendrite.n_vertices
    in_t[order[0]] = True
    nearest_leaf = [-1] * len(order)
    for i in range(1, len(order)):
        p = order[i]
        rows = np.fromiter(dendrite.members[p], dtype=np.intp, count=len(dendrite.members[p]))
        dist_to_leaves = matrix[np.ix_(rows, leaf_points)].max(axis=0)
        e_i = leaves[int(np.argmin(dist_to_leaves))]
        nearest_leaf[i] = e_i
        v = f[e_i]
        while not in_t[v]:
            v = filtration.toward_root[v]
        vertex_images.append(v)
        in_t[p] = True

    arc_targets: list[ArcTarget | None] = [None]
    for i in range(1, len(order)):
        arc_targets.append(
            _arc_target(dendrite, vertex_images[filtration.arc_parent[i]], vertex_images[i])
        )

    edge_roles: list[tuple] = []
    for e in dendrite.edges:
        iu, iv = filtration.pos[e.u], filtration.pos[e.v]
        if iu >= 0 and iv >= 0:
            # interior arc: the later endpoint determines the stage index
            if iu < iv:
                edge_roles.append(("arc", iv, True))
            else:
                edge_roles.append(("arc", iu, False))
        elif iu >= 0:
            edge_roles.append(("leaf", vertex_images[iu]))
        elif iv >= 0:
            edge_roles.append(("leaf", vertex_images[iv]))
        else:
            raise NotEndpointMap(f"edge ({e.u}, {e.v}) joins two leaves")

    return DendriteMap(
        dendrite,
        filtration,
        tuple(sorted(f.items())),
        tuple(vertex_images),
        tuple(arc_targets),
        tuple(edge_roles),
    )


def evaluate_map(dmap: DendriteMap, x: DPoint) -> DPoint:
    """Image of a dendrite point under the extended map."""
    dendrite = dmap.dendrite
    if x.vertex is not None:
        i = dmap.filtration.pos[x.vertex]
        if i >= 0:
            return DPoint(vertex=dmap.vertex_images[i])
        return DPoint(vertex=dict(dmap.endpoint_images)[x.vertex])
    role = dmap.edge_roles[x.edge]
    if role[0] == "leaf":
        return DPoint(vertex=role[1])
    _, i, from_u = role
    s = x.t if from_u else 1.0 - x.t
    return dmap.arc_targets[i].point_at(dendrite, s)


@dataclass(frozen=True)
class EmbeddedSystem:
    """A finite dynamical system transported onto a dendrite."""

    space: MetricSpace
    dendrite: Dendrite
    map: DendriteMap
    leaf_of_point: tuple[int, ...]


def embed_system(space: MetricSpace, f: Sequence[int] | Mapping[int, int]) -> EmbeddedSystem:
    """Build the dendrite of ``space`` and extend the point map ``f``.

    ``f`` sends point indices to point indices.  The returned system maps
    each point to its singleton leaf; the extended map is conjugate to
    ``f`` on those leaves.
    """
    n = space.size
    images = [int(f[i]) for i in range(n)]
    if any(not 0 <= v < n for v in images):
        raise NotEndpointMap("f must map point indices to point indices")
    hierarchy = build_cell_hierarchy(space)
    dendrite = build_dendrite(hierarchy, space)
    leaf_of_point = tuple(hierarchy.singleton(i) for i in range(n))
    filtration = build_filtration(dendrite)
    endpoint_images = {leaf_of_point[i]: leaf_of_point[images[i]] for i in range(n)}
    dmap = extend_map(dendrite, filtration, endpoint_images)
    return EmbeddedSystem(space, dendrite, dmap, leaf_of_point)


def extension_to_json(dmap: DendriteMap) -> dict:
    """Serializable description: vertex images plus arc target paths."""
    dendrite = dmap.dendrite
    labels = dendrite.space.labels

    def leaf_label(v: int) -> str:
        (p,) = dendrite.members[v]
        return labels[p]

    return {
        "order": list(dmap.filtration.order),
        "arc_parent": list(dmap.filtration.arc_parent),
        "vertex_images": [
            {"p": p, "q": q} for p, q in zip(dmap.filtration.order, dmap.vertex_images)
        ],
        "arcs": [
            {
                "index": i,
                "arc": [dmap.filtration.order[dmap.filtration.arc_parent[i]], dmap.filtration.order[i]],
                "target_path": list(dmap.arc_targets[i].vertices),
                "target_length": dmap.arc_targets[i].total,
            }
            for i in range(1, len(dmap.filtration.order))
        ],
        "endpoint_images": {leaf_label(a): leaf_label(b) for a, b in dmap.endpoint_images},
    }


def extension_from_json(data: Mapping, dendrite: Dendrite) -> DendriteMap:
    """Rebuild a :class:`DendriteMap` exported by :func:`extension_to_json`."""
    label_to_leaf = {}
    for v in dendrite.leaves():
        (p,) = dendrite.members[v]
        label_to_leaf[dendrite.space.labels[p]] = v
    filtration = build_filtration(dendrite, root=int(data["order"][0]))
    if list(filtration.order) != [int(v) for v in data["order"]]:
        raise NotEndpointMap("stored filtration order does not match the dendrite")
    endpoint_images = {
        label_to_leaf[a]: label_to_leaf[b] for a, b in data["endpoint_images"].items()
    }
    return extend_map(dendrite, filtration, endpoint_images)
