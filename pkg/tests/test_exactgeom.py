from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from bisectmesh.exactgeom import (
    Dyadic,
    DyadicPoint,
    barycentric,
    dyadic,
    max_sq_dist_from,
    midpoint,
    point,
    simplex_volume,
    sq_dist,
)


dyadics = st.builds(Dyadic, st.integers(-500, 500), st.integers(0, 8))


class TestDyadic:
    def test_canonical_form(self):
        assert Dyadic(4, 2) == Dyadic(1, 0)
        assert Dyadic(6, 1) == Dyadic(3, 0)
        assert Dyadic(0, 7) == Dyadic(0, 0)
        assert Dyadic(-8, 3) == Dyadic(-1, 0)

    @given(dyadics)
    def test_canonicalisation_fixed_point(self, d):
        again = Dyadic(d.num, d.exp)
        assert (again.num, again.exp) == (d.num, d.exp)

    @given(dyadics, dyadics)
    def test_field_ops_match_fractions(self, a, b):
        assert (a + b).as_fraction() == a.as_fraction() + b.as_fraction()
        assert (a - b).as_fraction() == a.as_fraction() - b.as_fraction()
        assert (a * b).as_fraction() == a.as_fraction() * b.as_fraction()
        assert a.half().as_fraction() == a.as_fraction() / 2

    @given(dyadics, dyadics)
    def test_ordering(self, a, b):
        assert (a < b) == (a.as_fraction() < b.as_fraction())

    def test_dyadic_coercion(self):
        assert dyadic(Fraction(3, 8)) == Dyadic(3, 3)
        with pytest.raises(ValueError):
            dyadic(Fraction(1, 3))


class TestMidpoint:
    def test_examples(self):
        half = Fraction(1, 2)
        assert midpoint(point(0, 0), point(1, 1)) == point(half, half)
        assert midpoint(point(half, 0), point(half, 1)) == point(half, half)
        assert midpoint(
            point(Fraction(1, 4), Fraction(3, 8)), point(Fraction(3, 4), Fraction(5, 8))
        ) == point(half, half)

    def test_symmetry_and_dim_check(self):
        a, b = point(1, 2), point(3, 5)
        assert midpoint(a, b) == midpoint(b, a)
        with pytest.raises(ValueError):
            midpoint(point(0, 0), point(0, 0, 0))


class TestVolume:
    def test_kuhn_triangle(self):
        assert simplex_volume([point(0, 0), point(1, 0), point(1, 1)]) == Fraction(1, 2)

    def test_kuhn_tet(self):
        verts = [point(0, 0, 0), point(1, 0, 0), point(1, 1, 0), point(1, 1, 1)]
        assert simplex_volume(verts) == Fraction(1, 6)

    def test_degenerate_is_zero(self):
        assert simplex_volume([point(0, 0), point(1, 1), point(2, 2)]) == 0

    @given(st.permutations(range(4)))
    def test_permutation_invariance(self, perm):
        verts = [point(0, 0, 0), point(3, 0, 1), point(1, 2, 0), point(0, 1, 5)]
        base = simplex_volume(verts)
        assert simplex_volume([verts[i] for i in perm]) == base

    def test_translation_invariance(self):
        verts = [point(0, 0), point(2, 1), point(1, 3)]
        moved = [p + point(7, -4) for p in verts]
        assert simplex_volume(verts) == simplex_volume(moved)


class TestBarycentric:
    tri = [point(0, 0), point(3, 0), point(0, 3)]

    def test_centroid(self):
        third = Fraction(1, 3)
        assert barycentric(point(1, 1), self.tri) == [third, third, third]

    def test_vertex_is_basis_vector(self):
        for i, v in enumerate(self.tri):
            coords = barycentric(v, self.tri)
            assert coords == [Fraction(int(i == j)) for j in range(3)]

    def test_outside(self):
        assert barycentric(point(2, 2), self.tri) is None
        assert barycentric(point(-1, 0), self.tri) is None

    def test_lower_dimensional_simplex(self):
        edge = [point(0, 0), point(2, 2)]
        assert barycentric(point(1, 1), edge) == [Fraction(1, 2), Fraction(1, 2)]
        assert barycentric(point(1, 0), edge) is None

    def test_degenerate_raises(self):
        with pytest.raises(ValueError):
            barycentric(point(0, 0), [point(0, 0), point(1, 1), point(2, 2)])


class TestDistances:
    def test_sq_dist(self):
        assert sq_dist(point(0, 0), point(1, 1)) == 2

    def test_max_from_circumcentre(self):
        tri = [point(0, 0), point(1, 0), point(1, 1)]
        half = point(Fraction(1, 2), Fraction(1, 2))
        assert max_sq_dist_from(half, tri) == Fraction(1, 2)

    @given(
        st.lists(st.integers(0, 16), min_size=6, max_size=6),
        st.integers(0, 4),
        st.integers(0, 4),
    )
    def test_max_attained_at_vertex(self, coords, wa, wb):
        """Brute-force oracle: the distance from any interior sample point to
        a fixed target never beats the best vertex."""
        verts = [
            DyadicPoint(coords[0:2]),
            DyadicPoint(coords[2:4]),
            DyadicPoint(coords[4:6]),
        ]
        target = point(coords[1], coords[4])
        best_vertex = max_sq_dist_from(target, verts)
        # dyadic convex samples with weights (wa, wb, 16 - wa - wb) / 16
        wc = 16 - wa - wb
        sample_fr = [
            sum(
                Fraction(w, 16) * v.coords[d].as_fraction()
                for w, v in zip((wa, wb, wc), verts)
            )
            for d in range(2)
        ]
        sample = DyadicPoint(sample_fr)
        assert sq_dist(target, sample) <= best_vertex
