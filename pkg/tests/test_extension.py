"""Interior filtration and extension of endpoint maps over the dendrite."""
import json

import numpy as np
import pytest

import dendrites as dn
from conftest import random_euclidean_space


def leaf_for_point(dendrite: dn.Dendrite, point: int) -> int:
    for v in dendrite.leaves():
        if dendrite.members[v] == frozenset([point]):
            return v
    raise AssertionError(f"no leaf for point {point}")


def interior_path(dendrite: dn.Dendrite, a: int, b: int) -> set[int]:
    """Vertices on the tree path between a and b (inclusive)."""
    seen_a = [a]
    v = a
    while dendrite.parent_vertex[v] != -1:
        v = dendrite.parent_vertex[v]
        seen_a.append(v)
    seen_b = [b]
    v = b
    while dendrite.parent_vertex[v] != -1:
        v = dendrite.parent_vertex[v]
        seen_b.append(v)
    common = set(seen_a) & set(seen_b)
    out = set()
    for chain in (seen_a, seen_b):
        for v in chain:
            out.add(v)
            if v in common:
                break
    return out


def star_space(n_leaves: int = 3) -> dn.MetricSpace:
    """Equidistant points: the hierarchy is one root over n singletons."""
    m = np.ones((n_leaves, n_leaves)) - np.eye(n_leaves)
    return dn.validate_metric([f"s{i}" for i in range(n_leaves)], m)


class TestFiltration:
    def test_harmonic4_order(self, harmonic4_dendrite):
        filt = dn.build_filtration(harmonic4_dendrite)
        den = harmonic4_dendrite
        member_order = [den.members[v] for v in filt.order]
        assert member_order == [
            frozenset([0, 1, 2, 3, 4]),
            frozenset([1, 2, 3, 4]),
            frozenset([1, 2, 3]),
            frozenset([2, 3]),
        ]
        assert len(list(filt.arcs())) == 3

    def test_root_must_be_interior(self, harmonic4_dendrite):
        leaf = harmonic4_dendrite.leaves()[0]
        with pytest.raises(dn.RootIsLeaf):
            dn.build_filtration(harmonic4_dendrite, root=leaf)

    def test_star_filtration_is_single_vertex(self):
        den = dn.dendrite_for_space(star_space())
        filt = dn.build_filtration(den)
        assert len(filt.order) == 1
        assert list(filt.arcs()) == []

    def test_ordering_constraint(self):
        den = dn.dendrite_for_space(dn.harmonic_space(8))
        filt = dn.build_filtration(den)
        pos = {v: i for i, v in enumerate(filt.order)}
        for i, v in enumerate(filt.order):
            for u in interior_path(den, filt.order[0], v):
                if u in pos:
                    assert pos[u] <= i

    def test_arc_parents_precede(self):
        den = dn.dendrite_for_space(dn.cantor_space(4))
        filt = dn.build_filtration(den)
        for i in range(1, len(filt.order)):
            assert 0 <= filt.arc_parent[i] < i


class TestExtendMap:
    def test_star_identity_everywhere_fixed(self):
        sp = star_space()
        system = dn.embed_system(sp, {0: 0, 1: 1, 2: 2})
        den = system.dendrite
        center = system.map.filtration.root
        center_pt = den.vertex_point(center)
        assert dn.evaluate_map(system.map, center_pt) == center_pt
        # every interior point of every (leaf) edge is eventually fixed at the
        # center: here immediately, because the whole arc retracts onto it
        for e in range(den.n_edges):
            img = dn.evaluate_map(system.map, den.edge_point(e, 0.37))
            assert img == center_pt

    def test_harmonic4_transposition_is_f_on_leaves(self, harmonic4):
        f = {0: 4, 4: 0, 1: 1, 2: 2, 3: 3}
        system = dn.embed_system(harmonic4, f)
        den = system.dendrite
        for point, image in f.items():
            leaf = leaf_for_point(den, point)
            out = dn.evaluate_map(system.map, den.vertex_point(leaf))
            assert out == den.vertex_point(leaf_for_point(den, image))

    def test_harmonic4_vertex_images(self, harmonic4):
        system = dn.embed_system(harmonic4, {0: 4, 4: 0, 1: 1, 2: 2, 3: 3})
        den, filt = system.dendrite, system.map.filtration
        images = {
            frozenset(den.members[p]): frozenset(den.members[q])
            for p, q in zip(filt.order, system.map.vertex_images)
        }
        # nearest-leaf pull-back sends each interior vertex one level rootward
        assert images[frozenset([0, 1, 2, 3, 4])] == frozenset([0, 1, 2, 3, 4])
        assert images[frozenset([1, 2, 3, 4])] == frozenset([0, 1, 2, 3, 4])
        assert images[frozenset([1, 2, 3])] == frozenset([1, 2, 3, 4])
        assert images[frozenset([2, 3])] == frozenset([1, 2, 3])

    def test_root_is_fixed_for_any_endpoint_map(self, harmonic4):
        rng = np.random.default_rng(9)
        sp = dn.harmonic_space(6)
        leaves = list(range(sp.size))
        for _ in range(5):
            f = {i: int(rng.choice(leaves)) for i in leaves}
            system = dn.embed_system(sp, f)
            root_pt = system.dendrite.vertex_point(system.map.filtration.root)
            assert dn.evaluate_map(system.map, root_pt) == root_pt

    def test_constant_map(self):
        sp = dn.harmonic_space(3)
        system = dn.embed_system(sp, {i: 3 for i in range(4)})
        den = system.dendrite
        target = den.vertex_point(leaf_for_point(den, 3))
        for i in range(4):
            leaf_pt = den.vertex_point(leaf_for_point(den, i))
            assert dn.evaluate_map(system.map, leaf_pt) == target

    def test_cyclic_odometer_space_conjugacy(self):
        n = 8
        matrix = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    diff = i ^ j
                    matrix[i, j] = 2.0 ** -((diff & -diff).bit_length() - 1)
        sp = dn.validate_metric([f"w{i}" for i in range(n)], matrix)
        system = dn.embed_system(sp, [(i + 1) % n for i in range(n)])
        den = system.dendrite
        for i in range(n):
            got = dn.evaluate_map(system.map, den.vertex_point(system.leaf_of_point[i]))
            assert got == den.vertex_point(system.leaf_of_point[(i + 1) % n])

    def test_rejects_non_leaf_images_and_partial_maps(self, harmonic4):
        den = dn.dendrite_for_space(harmonic4)
        filt = dn.build_filtration(den)
        leaves = den.leaves()
        with pytest.raises(dn.NotEndpointMap):
            dn.extend_map(den, filt, {leaves[0]: den.root})
        with pytest.raises(dn.NotEndpointMap):
            dn.extend_map(den, filt, {v: v for v in leaves[:-1]})
        with pytest.raises(dn.NotEndpointMap):
            dn.extend_map(den, filt, {**{v: v for v in leaves}, den.root: leaves[0]})


class TestEvaluate:
    @pytest.fixture()
    def transposition(self, harmonic4):
        return dn.embed_system(harmonic4, {0: 4, 4: 0, 1: 1, 2: 2, 3: 3})

    def test_arc_midpoint_maps_to_target_midpoint(self, transposition):
        system = transposition
        den, dmap = system.dendrite, system.map
        filt = dmap.filtration
        for i in range(1, len(filt.order)):
            target = dmap.arc_targets[i]
            edge = den.parent_edge[filt.order[i]]
            start = den.vertex_point(filt.order[filt.arc_parent[i]])
            mid_src = den.edge_point(edge, 0.5)
            img = dn.evaluate_map(dmap, mid_src)
            if target.total == 0.0:
                assert img == target.point_at(den, 0.0)
            else:
                assert dn.rho(den, target.point_at(den, 0.0), img) == pytest.approx(
                    0.5 * target.total, abs=1e-12
                )

    def test_well_defined_at_all_skeleton_vertices(self, transposition):
        # each edge's action, evaluated at an endpoint parameter, must agree
        # with the stored image of that vertex (shared arc endpoints included)
        system = transposition
        den, dmap = system.dendrite, system.map
        for edge_id, edge in enumerate(den.edges):
            role = dmap.edge_roles[edge_id]
            for vertex, t in ((edge.u, 0.0), (edge.v, 1.0)):
                if den.is_leaf(vertex):
                    continue
                expected = dn.evaluate_map(dmap, den.vertex_point(vertex))
                if role[0] == "leaf":
                    got = dn.DPoint(vertex=role[1])
                else:
                    _, i, from_u = role
                    s = t if from_u else 1.0 - t
                    got = dmap.arc_targets[i].point_at(den, s)
                assert got == expected

    def test_monotone_along_each_arc(self, transposition):
        system = transposition
        den, dmap = system.dendrite, system.map
        filt = dmap.filtration
        for i in range(1, len(filt.order)):
            target = dmap.arc_targets[i]
            if target.total == 0.0:
                continue
            edge = den.parent_edge[filt.order[i]]
            start = target.point_at(den, 0.0)
            dists = []
            for t in np.linspace(0.05, 0.95, 7):
                img = dn.evaluate_map(dmap, den.edge_point(edge, float(t)))
                dists.append(dn.rho(den, start, img))
            assert all(b >= a - 1e-12 for a, b in zip(dists, dists[1:]))

    def test_descent_reaches_root_within_interior_count(self):
        sp = dn.harmonic_space(12)
        rng = np.random.default_rng(13)
        perm = rng.permutation(sp.size)
        system = dn.embed_system(sp, [int(v) for v in perm])
        den, dmap = system.dendrite, system.map
        budget = len(dmap.filtration.order)
        root_pt = den.vertex_point(dmap.filtration.root)
        for _ in range(300):
            x = dn.random_dpoint(den, rng)
            if x.vertex is not None and den.is_leaf(x.vertex):
                continue
            for _ in range(budget):
                x = dn.evaluate_map(dmap, x)
            assert x == root_pt


class TestExtensionSerialization:
    def test_round_trip(self, harmonic4):
        system = dn.embed_system(harmonic4, {0: 4, 4: 0, 1: 1, 2: 2, 3: 3})
        data = json.loads(json.dumps(dn.extension_to_json(system.map)))
        rebuilt = dn.extension_from_json(data, system.dendrite)
        assert rebuilt.vertex_images == system.map.vertex_images
        assert rebuilt.endpoint_images == system.map.endpoint_images
        den = system.dendrite
        rng = np.random.default_rng(17)
        for _ in range(100):
            x = dn.random_dpoint(den, rng)
            assert dn.evaluate_map(rebuilt, x) == dn.evaluate_map(system.map, x)

    def test_reversed_order_is_valid_filtration_from_other_end(self, harmonic4):
        # the interior skeleton of this dendrite is a path, so the reversed
        # order is itself a legal filtration rooted at the far end
        system = dn.embed_system(harmonic4, {i: i for i in range(5)})
        data = dn.extension_to_json(system.map)
        data["order"] = list(reversed(data["order"]))
        rebuilt = dn.extension_from_json(data, system.dendrite)
        assert list(rebuilt.filtration.order) == data["order"]

    def test_rejects_wrong_order(self, harmonic4):
        system = dn.embed_system(harmonic4, {i: i for i in range(5)})
        data = dn.extension_to_json(system.map)
        # not a breadth-first enumeration from its own first element
        shuffled = list(data["order"])
        shuffled[1], shuffled[2] = shuffled[2], shuffled[1]
        data["order"] = shuffled
        with pytest.raises(dn.NotEndpointMap):
            dn.extension_from_json(data, system.dendrite)

    def test_rejects_leaf_root(self, harmonic4):
        system = dn.embed_system(harmonic4, {i: i for i in range(5)})
        den = system.dendrite
        data = dn.extension_to_json(system.map)
        data["order"][0] = den.leaves()[0]
        with pytest.raises(dn.RootIsLeaf):
            dn.extension_from_json(data, den)
