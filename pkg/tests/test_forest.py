import random

from fractions import Fraction

import pytest

from bisectmesh import Triangulation
from bisectmesh.forest import (
    closure01,
    demands0,
    demands1,
    finer,
    forest_size_identity,
    overlay,
    tower,
    underlay,
    verify_forest_characterisation,
)
from bisectmesh.refine import refine
from conftest import kuhn_square, staircase_mesh


class TestCountingIdentity:
    def test_initial(self, square):
        assert forest_size_identity(square) == (0, 0, 0)

    def test_one_bisection(self, square):
        square.bisect_leaf(next(iter(square.leaves)))
        assert forest_size_identity(square) == (1, 1, 1)

    def test_random_runs_against_recount(self):
        rng = random.Random(5)
        tri = kuhn_square()
        for _ in range(40):
            refine(tri, rng.choice(sorted(tri.leaves)))
            a, b, c = forest_size_identity(tri)
            assert a == b == c
            # independent recount straight from the definition
            nodes = tri.node_set()
            roots = set(tri.forest.roots)
            leaves = tri.leaves
            assert a == len(leaves) - len(roots)
            assert b == sum(1 for x in nodes if x not in leaves)
            assert c == len(nodes - roots) / 2


class TestFiner:
    def test_reflexive(self, square):
        assert finer(square, square)

    def test_refined_is_finer(self, square):
        refined = square.copy()
        refine(refined, min(refined.leaves))
        assert finer(refined, square)
        assert not finer(square, refined)

    def test_incomparable_single_bisections(self):
        tri = kuhn_square()
        a = tri.copy()
        b = tri.copy()
        la, lb = sorted(tri.leaves)
        a.bisect_leaf(la)
        b.bisect_leaf(lb)
        assert not finer(a, b)
        assert not finer(b, a)

    def test_root_mismatch_rejected(self):
        p, q = kuhn_square(), kuhn_square()
        with pytest.raises(ValueError):
            finer(p, q)


class TestOverlayUnderlay:
    def test_identity_laws(self, square):
        assert overlay(square, square).leaves == square.leaves
        assert underlay(square, square).leaves == square.leaves

    def test_overlay_with_initial(self, square):
        refined = square.copy()
        refine(refined, min(refined.leaves))
        assert overlay(square, refined).leaves == refined.leaves
        assert underlay(square, refined).leaves == square.leaves

    def test_lattice_absorption(self):
        rng = random.Random(11)
        base = kuhn_square()
        p = base.copy()
        q = base.copy()
        for _ in range(5):
            refine(p, rng.choice(sorted(p.leaves)))
            refine(q, rng.choice(sorted(q.leaves)))
        assert overlay(p, underlay(p, q)).leaves == p.leaves
        ov = overlay(p, q)
        assert finer(ov, p) and finer(ov, q)
        grown = lambda t: len(t.leaves) - 2
        assert grown(ov) <= grown(p) + grown(q)

    def test_volume_conserved(self):
        rng = random.Random(3)
        p = kuhn_square()
        q = p.copy()
        for _ in range(4):
            refine(p, rng.choice(sorted(p.leaves)))
            refine(q, rng.choice(sorted(q.leaves)))
        assert overlay(p, q).total_volume() == Fraction(1)
        assert underlay(p, q).total_volume() == Fraction(1)


class TestDemands:
    def test_siblings_demand_each_other(self, square):
        leaf = min(square.leaves)
        c1, c2 = square.forest.ensure_children(leaf)
        assert demands0(square.forest, c1, c2)
        assert demands0(square.forest, c2, c1)

    def test_child_demands_parent_class(self):
        tri = kuhn_square()
        forest = tri.forest
        leaf = min(tri.leaves)
        c1, _ = forest.ensure_children(leaf)
        # leaf is a root, so its children have no ->1 targets; go one deeper
        g1, _ = forest.ensure_children(c1)
        assert demands1(forest, g1, c1)

    def test_closure_equals_tower(self):
        rng = random.Random(17)
        tri = kuhn_square()
        for _ in range(25):
            refine(tri, rng.choice(sorted(tri.leaves)))
        for leaf in sorted(tri.leaves)[:10]:
            child, _ = tri.forest.ensure_children(leaf)
            tw = tower(tri, child)
            cl = closure01(tri.forest, [child]) - tri.node_set()
            assert cl == tw


class TestTower:
    def test_compatible_patch(self, square):
        leaf = min(square.leaves)
        child, _ = square.forest.ensure_children(leaf)
        tw = tower(square, child)
        # both sharers of the diagonal bisect: 4 new nodes
        assert len(tw) == 4

    def test_sibling_towers_coincide(self, square):
        leaf = min(square.leaves)
        c1, c2 = square.forest.ensure_children(leaf)
        assert tower(square, c1) == tower(square, c2)

    def test_staircase_tower_grows_linearly(self):
        """The worst tower of a graded staircase grows with its length;
        values frozen from the hanging-node repair oracle (4 per stair)."""
        sizes = []
        for steps in (4, 8, 12):
            tri = staircase_mesh(steps)
            worst = 0
            for leaf in sorted(tri.leaves):
                child, _ = tri.forest.ensure_children(leaf)
                worst = max(worst, len(tower(tri, child)))
            sizes.append(worst)
        assert sizes == [10, 26, 42]

    def test_requires_child_of_leaf(self, square):
        with pytest.raises(ValueError):
            tower(square, min(square.leaves))


class TestArenaLinks:
    def test_parent_child_links_consistent(self):
        rng = random.Random(2)
        tri = kuhn_square()
        for _ in range(20):
            refine(tri, rng.choice(sorted(tri.leaves)))
        forest = tri.forest
        for node in forest.nodes:
            if node.children is not None:
                for c in node.children:
                    assert forest.nodes[c].parent == node.index
            if node.parent is not None:
                assert node.index in forest.nodes[node.parent].children
                assert node.index > node.parent  # acyclic by construction


class TestCharacterisation:
    def test_initial_passes(self, square):
        assert verify_forest_characterisation(square) == []

    def test_refined_passes(self):
        rng = random.Random(23)
        for n_rounds in (5, 15):
            tri = kuhn_square()
            for _ in range(n_rounds):
                refine(tri, rng.choice(sorted(tri.leaves)))
            assert verify_forest_characterisation(tri) == []

    def test_removed_pair_fails(self):
        rng = random.Random(29)
        tri = kuhn_square()
        for _ in range(10):
            refine(tri, rng.choice(sorted(tri.leaves)))
        forest = tri.forest
        nodes = tri.node_set()
        # drop a leaf pair whose new vertex also created other cells: the
        # remaining classmates expose the hole
        for u in sorted(nodes):
            ch = forest.nodes[u].children
            if ch is None or not set(ch) <= tri.leaves:
                continue
            vn = forest.nodes[ch[0]].v_new
            classmates = [
                w.index
                for w in forest.nodes
                if w.v_new == vn and w.index not in ch and w.index in nodes
            ]
            if classmates:
                broken = Triangulation(forest, (tri.leaves - set(ch)) | {u})
                assert verify_forest_characterisation(broken) != []
                return
        pytest.fail("no removable sibling pair with classmates found")
