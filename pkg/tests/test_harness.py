import math
import random
from fractions import Fraction

import pytest

from bisectmesh import Triangulation, VertexPool, kuhn, point
from bisectmesh.harness import (
    Trace,
    compute_constants,
    compute_d,
    c_iso,
    c_sic,
    run_sequence,
    shape_census,
    tower_patch_spotcheck,
    unit_ball_volume,
    upper_bound_int,
    verify_bdv,
)
from bisectmesh.inittags import VertexPartition, agk_init
from bisectmesh.refine import refine
from bisectmesh.tarray import TaggedSimplex

from conftest import kuhn_square, single_kuhn


def half_kuhn_mesh(n):
    """One half-scaled Kuhn simplex of full type and hyperlevel 1."""
    pool = VertexPool()
    k = kuhn(list(range(1, n + 1)), [1] * n, pool)
    half_ids = tuple(pool.id_of(pool.point(v).half()) for v in k.vertex_ids)
    return Triangulation.from_cells(pool, [TaggedSimplex(half_ids, (), 0, 1)])


class TestVolumeFloors:
    def test_d_examples(self):
        assert compute_d(single_kuhn(2)) == Fraction(1, 2)
        assert compute_d(single_kuhn(3)) == Fraction(1, 6)
        assert compute_d(single_kuhn(4)) == Fraction(1, 24)

    def test_d_scales_with_mesh(self):
        pool = VertexPool()
        ids = [
            pool.id_of(point(0, 0)),
            pool.id_of(point(3, 0)),
            pool.id_of(point(3, 3)),
        ]
        tri = Triangulation.from_cells(pool, [TaggedSimplex(tuple(ids), ())])
        assert compute_d(tri) == Fraction(9, 2)  # 3^n times the unit value

    def test_d_invariant_under_refinement(self):
        tri = kuhn_square()
        d0 = compute_d(tri)
        rng = random.Random(1)
        for _ in range(10):
            refine(tri, rng.choice(sorted(tri.leaves)))
        assert compute_d(tri) == d0

    def test_d_iso_invariant_along_tree(self):
        pool = VertexPool()
        s = kuhn([1, 2, 3], [1, 1, 1], pool)
        from bisectmesh.tarray import bisect
        from bisectmesh.exactgeom import simplex_volume

        def value(t):
            n = t.dim
            return (
                Fraction(2) ** (n * t.hyperlevel + n - t.type)
                * simplex_volume(t.vertices(pool))
            )

        base = value(s)
        cur = s
        for _ in range(7):
            cur, other, _ = bisect(cur, pool)
            assert value(cur) == base
            assert value(other) == base


class TestDistanceCeilings:
    def test_census_sic_values(self):
        for n, expected_sq in ((2, 1), (3, 2), (4, 3)):
            tri = single_kuhn(n)
            consts = compute_constants(tri)
            assert consts.settled
            assert consts.D_squared == expected_sq

    def test_census_iso_values(self):
        for n, expected_sq in ((2, 2), (3, 3), (4, 4)):
            tri = half_kuhn_mesh(n)
            consts = compute_constants(tri)
            assert consts.D_iso_squared == expected_sq

    def test_settling_generations(self):
        """Frozen from the closure enumeration: the class set of one Kuhn
        simplex stops growing after these breadth-first generations."""
        got = {}
        for n in (2, 3, 4):
            tri = single_kuhn(n)
            census = shape_census(
                tri.forest.tarray(tri.forest.roots[0]), tri.forest.pool
            )
            assert census.settled
            got[n] = census.generations
        assert got == {2: 6, 3: 11, 4: 16}

    def test_census_on_skewed_cell(self):
        pool = VertexPool()
        ids = [
            pool.id_of(point(0, 0)),
            pool.id_of(point(4, 0)),
            pool.id_of(point(3, 2)),
        ]
        tri = Triangulation.from_cells(pool, [TaggedSimplex(tuple(ids), ())])
        consts = compute_constants(tri)
        assert consts.settled
        # ceiling must dominate the value observed on sampled descendants
        rng = random.Random(3)
        from bisectmesh.tarray import bisect

        cur = tri.forest.tarray(tri.forest.roots[0])
        vol0 = cur.volume(pool)
        for _ in range(12):
            c1, c2, vnew = bisect(cur, pool)
            cur = c1 if rng.random() < 0.5 else c2
            from bisectmesh.exactgeom import max_sq_dist_from

            v_2n = (Fraction(2) ** (2 * cur.level)) * max_sq_dist_from(
                pool.point(vnew), cur.vertices(pool)
            ) ** 2
            assert v_2n <= consts.D_pow_2n


class TestConstants:
    def test_sic_table(self):
        rows = {
            2: (37, 36.6),
            3: (4100, 4.1e3),
            4: (840_000, 8.4e5),
        }
        for n, (ceiling, approx) in rows.items():
            consts = compute_constants(single_kuhn(n))
            assert consts.C_sic <= ceiling
            assert abs(consts.C_sic - approx) <= 0.02 * approx

    def test_iso_table(self):
        rows = {
            2: (64, 1.8e4),
            3: (512, 5.9e6),
            4: (65_536, 4.1e10),
        }
        for n, (factor, approx) in rows.items():
            consts = compute_constants(half_kuhn_mesh(n))
            assert consts.first_summand_factor == factor
            assert abs(consts.C_iso - approx) <= 0.05 * approx

    def test_monotonicity_in_d_and_D(self):
        base = c_sic(Fraction(1, 2), 1.0, 2)
        assert c_sic(Fraction(1, 2), 1.1, 2) > base
        assert c_sic(Fraction(1, 4), 1.0, 2) > base
        ci, _ = c_iso(Fraction(1, 2), 1.0, 2)
        assert c_iso(Fraction(1, 2), 1.2, 2)[0] > ci
        assert c_iso(Fraction(1, 8), 1.0, 2)[0] > ci

    def test_coarse_first_summands(self):
        consts = compute_constants(half_kuhn_mesh(2))
        assert consts.coarse_first_summand() == 16**2
        assert consts.coarse_first_summand(v0_empty=True) == 8**2

    def test_unit_ball_volumes(self):
        assert unit_ball_volume(2) == pytest.approx(math.pi)
        assert unit_ball_volume(3) == pytest.approx(4 / 3 * math.pi)
        assert unit_ball_volume(4) == pytest.approx(math.pi**2 / 2)

    def test_upper_bound_never_rounds_down(self):
        assert upper_bound_int(36.62, 10) >= 367
        assert 7 <= upper_bound_int(1.0, 7) <= 8


class TestRunSequence:
    def test_single_mark_on_compatible_patch(self, square):
        trace = run_sequence(square, "max-level-leaf", 1, seed=0)
        assert trace.rows[0][2] == 2  # both diagonal sharers bisect

    def test_every_strategy_produces_valid_traces(self, square):
        for strategy in (
            "random-leaf",
            "max-level-leaf",
            "staircase-adversary",
            "quasitower-adversary",
        ):
            tri = kuhn_square()
            trace = run_sequence(tri, strategy, 25, seed=5)
            assert trace.rounds == 25
            assert trace.max_jump <= 4
            counts = [row[3] for row in trace.rows]
            assert counts == sorted(counts)

    def test_trace_csv(self, square):
        trace = run_sequence(square, "random-leaf", 5, seed=1)
        lines = trace.csv_lines(36.7)
        assert lines[0].startswith("round,marked_cell,")
        assert len(lines) == 6

    def test_verify_bdv_modes(self):
        tri = kuhn_square()
        consts = compute_constants(tri)
        trace = run_sequence(tri, "random-leaf", 60, seed=2)
        assert verify_bdv(trace, consts, "sic") == []
        with pytest.raises(ValueError):
            verify_bdv(trace, consts, "nonsense")

    def test_per_round_growth_equals_tower_size(self):
        """Cross-check a sample of rounds against the tower of the marked
        cell's child: cells added = half the tower's node count."""
        from bisectmesh.forest import tower

        rng = random.Random(10)
        tri = kuhn_square()
        for rnd in range(40):
            marked = rng.choice(sorted(tri.leaves))
            expected = None
            if rnd % 7 == 0:
                child, _ = tri.forest.ensure_children(marked)
                expected = len(tower(tri, child)) // 2
            before = len(tri.leaves)
            refine(tri, marked)
            if expected is not None:
                assert len(tri.leaves) - before == expected

    def test_verify_bdv_flags_inflated_trace(self):
        tri = kuhn_square()
        consts = compute_constants(tri)
        trace = run_sequence(tri, "random-leaf", 10, seed=3)
        forged = Trace(
            trace.mesh_hash, trace.strategy, trace.seed, trace.n, trace.initial_cells
        )
        forged.rows = [list(r) for r in trace.rows]
        forged.rows[4] = tuple(
            [5, 0, 10**6, trace.initial_cells + 10**6, 2 * 10**6, 1]
        )
        report = verify_bdv(forged, consts, "sic")
        assert report and "round 5" in report[0]


class TestTowerPatchSpotcheck:
    def test_shallow_mesh_vacuous(self):
        pool = VertexPool()
        a = pool.id_of(point(0, 0))
        b = pool.id_of(point(1, 0))
        c = pool.id_of(point(1, 1))
        d = pool.id_of(point(0, 1))
        tri = agk_init(
            pool,
            [(a, b, c), (a, c, d)],
            VertexPartition(frozenset(), frozenset({a, b, c, d})),
        )
        report = tower_patch_spotcheck(tri, samples=5, seed=0)
        assert report["sampled"] == 0
        assert report["failures"] == []

    def test_deep_layers_inside_patches(self):
        pool = VertexPool()
        a = pool.id_of(point(0, 0))
        b = pool.id_of(point(1, 0))
        c = pool.id_of(point(1, 1))
        d = pool.id_of(point(0, 1))
        tri = agk_init(
            pool,
            [(a, b, c), (a, c, d)],
            VertexPartition(frozenset(), frozenset({a, b, c, d})),
        )
        rng = random.Random(21)
        for _ in range(260):
            leaf = max(
                tri.leaves,
                key=lambda nid: (tri.forest.tarray(nid).hyperlevel, rng.random()),
            )
            refine(tri, leaf)
        report = tower_patch_spotcheck(tri, samples=25, seed=1)
        assert report["sampled"] > 0
        assert report["layers_checked"] > 0
        assert report["failures"] == []
        assert report["worst_diameter_ratio"] <= 2.0
