"""Tagging initialisers and initial-condition verifiers.

Two ways to equip an untagged regular mesh with T-arrays: the generalised
initial division (recursive division by typed marked points, ending in
type-1 arrays that satisfy the strong initial conditions) and the
vertex-partition algorithm (hyperlevel 0/1 tagging that satisfies restricted
T-array and hyperlevel coincidence).  The ``check_*`` functions report
violations instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

from .exactgeom import DyadicPoint, barycentric, sq_dist
from .tarray import TaggedSimplex, VertexPool, canonicalize, lattice_of, refinement_edge, restrict
from .forest import Triangulation
from .refine import check_conforming, uniform_refine


@dataclass
class PointMarking:
    """Typed division points: one point of type m per m-subsimplex that is
    free of higher-type points."""

    points_by_type: dict[int, list[DyadicPoint]] = field(default_factory=dict)


@dataclass
class VertexPartition:
    """Disjoint cover (v0, v1) of the initial vertices with total orders."""

    v0: frozenset
    v1: frozenset
    order0: Optional[Sequence[int]] = None
    order1: Optional[Sequence[int]] = None

    def rank0(self) -> dict:
        order = self.order0 if self.order0 is not None else sorted(self.v0)
        return {v: i for i, v in enumerate(order)}

    def rank1(self) -> dict:
        order = self.order1 if self.order1 is not None else sorted(self.v1)
        return {v: i for i, v in enumerate(order)}


class MarkingError(ValueError):
    pass


def _point_in_subsimplex(pool: VertexPool, p: DyadicPoint, ids) -> bool:
    return barycentric(p, [pool.point(v) for v in ids]) is not None


def _free_subsimplices(
    pool: VertexPool, cells: Sequence[tuple], m: int, higher_points: list
) -> set:
    """m-subsimplices of the mesh containing no point of type > m."""
    subs = set()
    for cell in cells:
        subs.update(frozenset(c) for c in combinations(cell, m + 1))
    return {
        s
        for s in subs
        if not any(_point_in_subsimplex(pool, q, s) for q in higher_points)
    }


def resolve_marking(
    pool: VertexPool, cells: Sequence[tuple], marking: PointMarking
) -> dict:
    """Validate a marking and compute the subsimplex -> point assignment.

    Every free m-subsimplex must contain exactly one type-m point; a type-m
    point lying in no free m-subsimplex is an extra point.  Raises
    :class:`MarkingError` otherwise.
    """
    n = len(cells[0]) - 1
    assignment: dict[frozenset, DyadicPoint] = {}
    higher: list[DyadicPoint] = []
    for m in range(n, 1, -1):
        points = marking.points_by_type.get(m, [])
        free = _free_subsimplices(pool, cells, m, higher)
        used = [False] * len(points)
        for s in free:
            inside = [
                i for i, q in enumerate(points) if _point_in_subsimplex(pool, q, s)
            ]
            if len(inside) != 1:
                raise MarkingError(
                    f"type-{m} marking gives {len(inside)} points in subsimplex "
                    f"{sorted(s)}; need exactly one"
                )
            assignment[s] = points[inside[0]]
            used[inside[0]] = True
        for i, q in enumerate(points):
            if not used[i]:
                raise MarkingError(
                    f"type-{m} point {q!r} lies in no free {m}-subsimplex"
                )
        higher.extend(points)
    return assignment


def barycentre_marking(pool: VertexPool, cells: Sequence[tuple]) -> PointMarking:
    """Barycentres of all m-subsimplices: the classical full division into
    (n+1)!/2 cells per simplex."""
    n = len(cells[0]) - 1
    marking = PointMarking()
    for m in range(n, 1, -1):
        subs = set()
        for cell in cells:
            subs.update(frozenset(c) for c in combinations(cell, m + 1))
        marking.points_by_type[m] = [_barycentre(pool, s) for s in sorted(map(sorted, subs))]
    return marking


def _barycentre(pool: VertexPool, ids) -> DyadicPoint:
    ids = list(ids)
    pts = [pool.point(v).as_fractions() for v in ids]
    k = len(pts)
    coords = [sum(p[d] for p in pts) / k for d in range(len(pts[0]))]
    # Barycentres of even-sized vertex sets are dyadic only for k a power of
    # two; reject other cases early with a clear message.
    try:
        return DyadicPoint(coords)
    except ValueError as exc:
        raise MarkingError(
            f"barycentre of {ids} is not dyadic; supply explicit dyadic marking"
        ) from exc


def greedy_low_dim_marking(pool: VertexPool, cells: Sequence[tuple]) -> PointMarking:
    """Distribution pass preferring points on low-dimensional faces.

    Candidate faces are scanned by dimension, then by longest edge
    (descending), ties broken by vertex ids; each chosen point is the
    barycentre of its face and covers every free subsimplex containing it.
    """
    n = len(cells[0]) - 1
    marking = PointMarking()
    higher: list[DyadicPoint] = []
    for m in range(n, 1, -1):
        free = _free_subsimplices(pool, cells, m, higher)
        candidates = set()
        for s in free:
            for k in range(1, m + 2):
                candidates.update(frozenset(c) for c in combinations(sorted(s), k))

        def sort_key(face):
            ids = sorted(face)
            longest = max(
                (sq_dist(pool.point(a), pool.point(b)) for a, b in combinations(ids, 2)),
                default=Fraction(0),
            )
            return (len(ids), -longest, ids)

        chosen: list[DyadicPoint] = []
        uncovered = set(free)
        for face in sorted(candidates, key=sort_key):
            if not uncovered:
                break
            try:
                p = _barycentre(pool, sorted(face))
            except MarkingError:
                continue
            patch = {s for s in free if _point_in_subsimplex(pool, p, s)}
            # a point landing in an already-covered subsimplex would give it
            # a second type-m point; such candidates left the remainder
            if patch & uncovered and not patch - uncovered:
                chosen.append(p)
                uncovered -= patch
        if uncovered:
            raise MarkingError(f"could not cover all free {m}-subsimplices")
        marking.points_by_type[m] = chosen
        higher.extend(chosen)
    return marking


def initial_division(
    pool: VertexPool,
    cells: Sequence[tuple],
    marking: Optional[PointMarking] = None,
) -> Triangulation:
    """Recursive division of every cell by its typed points; the resulting
    cells carry type-1 T-arrays and satisfy the strong initial conditions."""
    n = len(cells[0]) - 1
    if any(len(c) != n + 1 for c in cells):
        raise MarkingError("all cells must be n-simplices of one dimension")
    if marking is None:
        marking = barycentre_marking(pool, cells)
    assignment = resolve_marking(pool, cells, marking)
    parts = [(tuple(sorted(cell)), ()) for cell in cells]
    for m in range(n, 1, -1):
        next_parts = []
        for old, new in parts:
            q = assignment[frozenset(old)]
            coords = barycentric(q, [pool.point(v) for v in old])
            if coords is None:
                raise MarkingError(f"marked point {q!r} outside its subsimplex")
            support = [v for v, c in zip(old, coords) if c != 0]
            q_id = pool.id_of(q)
            for dropped in support:
                rest = tuple(v for v in old if v != dropped)
                next_parts.append((rest, (q_id, *new)))
        parts = next_parts
    tagged = [
        TaggedSimplex(old, new, level=0, hyperlevel=0) for old, new in parts
    ]
    return Triangulation.from_cells(pool, tagged)


def agk_init(
    pool: VertexPool, cells: Sequence[tuple], partition: VertexPartition
) -> Triangulation:
    """Tag every cell from a two-block vertex partition.

    Cells touching the first block become hyperlevel 0 with the touched
    vertices as (ordered) horizontal part; cells inside the second block
    become full-type hyperlevel 1.
    """
    all_vertices = {v for cell in cells for v in cell}
    if (partition.v0 | partition.v1) != frozenset(all_vertices) or (
        partition.v0 & partition.v1
    ):
        raise MarkingError("partition must split the vertex set into two blocks")
    r0, r1 = partition.rank0(), partition.rank1()
    tagged = []
    for cell in cells:
        hor = sorted((v for v in cell if v in partition.v0), key=r0.__getitem__)
        ver = sorted((v for v in cell if v in partition.v1), key=r1.__getitem__)
        if hor:
            tagged.append(TaggedSimplex(tuple(hor), tuple(ver), 0, 0))
        else:
            tagged.append(TaggedSimplex(tuple(ver), (), 0, 1))
    return Triangulation.from_cells(pool, tagged)


# --- verifiers ---------------------------------------------------------------


def _cell_pairs(tri: Triangulation):
    """Pairs of leaves sharing at least one vertex."""
    seen = set()
    for sharers in tri.vertex_index.values():
        for a, b in combinations(sorted(sharers), 2):
            if (a, b) not in seen:
                seen.add((a, b))
                yield a, b


def check_sic(tri: Triangulation, depth: Optional[int] = None) -> list[str]:
    """Operational test of the strong initial conditions.

    Verifies regularity and equal types, then re-checks refinement-edge
    consistency on successive uniform refinements up to ``depth`` (default
    n+1).  The depth-limited edge test stands in for the reference-coordinate
    clause; see the README for the heuristic character of the default.
    """
    problems = list(check_conforming(tri))
    forest = tri.forest
    types = {forest.tarray(leaf).type for leaf in tri.leaves}
    if len(types) > 1:
        problems.append(f"mixed initial types {sorted(types)}")
    if problems:
        return problems
    n = forest.tarray(next(iter(tri.leaves))).dim
    depth = depth if depth is not None else n + 1
    stage = tri.copy()
    for d in range(depth):
        for edge_ids, sharers in stage.edge_index.items():
            owners = {
                leaf
                for leaf in sharers
                if refinement_edge(forest.tarray(leaf)).ids == edge_ids
            }
            if owners and owners != sharers:
                problems.append(
                    f"uniform refinement {d}: edge {set(edge_ids)} is the "
                    f"refinement edge of {len(owners)} of {len(sharers)} sharers"
                )
                return problems
        stage = uniform_refine(stage)
        hanging = check_conforming(stage)
        if hanging:
            problems.append(f"uniform refinement {d + 1} not conforming")
            problems.extend(hanging)
            return problems
    return problems


def check_retaco(tri: Triangulation) -> list[str]:
    """Restricted T-arrays of intersecting cells must coincide up to the
    reflexion/transposition identification."""
    problems = []
    forest = tri.forest
    for a, b in _cell_pairs(tri):
        sa, sb = forest.tarray(a), forest.tarray(b)
        shared = set(sa.vertex_ids) & set(sb.vertex_ids)
        ra = canonicalize(restrict(sa, shared, rule="legacy"))
        rb = canonicalize(restrict(sb, shared, rule="legacy"))
        if ra != rb:
            problems.append(
                f"cells {a} and {b}: restrictions to {sorted(shared)} differ "
                f"({ra.horizontal}|{ra.vertical} vs {rb.horizontal}|{rb.vertical})"
            )
    return problems


def check_retahyco(tri: Triangulation) -> list[str]:
    """Hyperlevels in {0, 1}, full type at hyperlevel 1, a consistent
    per-vertex hyperlevel, and reflexion-coincident restrictions."""
    problems = list(check_conforming(tri))
    forest = tri.forest
    n = forest.tarray(next(iter(tri.leaves))).dim
    vertex_h: dict[int, int] = {}
    for leaf in sorted(tri.leaves):
        t = forest.tarray(leaf)
        if t.hyperlevel not in (0, 1):
            problems.append(f"cell {leaf}: hyperlevel {t.hyperlevel} not in {{0,1}}")
            continue
        if t.hyperlevel == 1 and t.type != n:
            problems.append(f"cell {leaf}: hyperlevel 1 but type {t.type} != {n}")
        for v in t.horizontal:
            h = t.hyperlevel
            if vertex_h.setdefault(v, h) != h:
                problems.append(f"vertex {v}: inconsistent hyperlevel assignment")
        for v in t.vertical:
            h = t.hyperlevel + 1
            if vertex_h.setdefault(v, h) != h:
                problems.append(f"vertex {v}: inconsistent hyperlevel assignment")
    for a, b in _cell_pairs(tri):
        sa, sb = forest.tarray(a), forest.tarray(b)
        shared = set(sa.vertex_ids) & set(sb.vertex_ids)
        ra = restrict(sa, shared, rule="hyper")
        rb = restrict(sb, shared, rule="hyper")
        if ra.hyperlevel != rb.hyperlevel:
            problems.append(
                f"cells {a} and {b}: restriction hyperlevels "
                f"{ra.hyperlevel} != {rb.hyperlevel}"
            )
        elif ra.vertical != rb.vertical or (
            ra.horizontal != rb.horizontal
            and ra.horizontal != tuple(reversed(rb.horizontal))
        ):
            problems.append(
                f"cells {a} and {b}: restrictions to {sorted(shared)} do not "
                "coincide up to reflexion"
            )
    return problems


def check_pc(tri: Triangulation) -> list[str]:
    """Pairwise compatibility of the roots: a regular mesh where two cells
    whose refinement edges both lie in the intersection agree on that edge.

    The no-infinite-path clause holds automatically for this bisection rule
    and is not checked.
    """
    problems = list(check_conforming(tri))
    forest = tri.forest
    for a, b in _cell_pairs(tri):
        sa, sb = forest.tarray(a), forest.tarray(b)
        shared = set(sa.vertex_ids) & set(sb.vertex_ids)
        ea, eb = refinement_edge(sa), refinement_edge(sb)
        if ea.ids <= shared and eb.ids <= shared and ea.ids != eb.ids:
            problems.append(
                f"cells {a} and {b}: refinement edges {set(ea.ids)} and "
                f"{set(eb.ids)} both lie in the intersection but differ"
            )
    return problems


def check_isocochange(tri: Triangulation) -> list[str]:
    """Intersection sublattices of the refined Chebyshev lattices coincide.

    The sublattice spanned by the intersection is the lattice of the
    restricted T-array (restrictions of reference simplices are reference
    simplices in sublattices), refined to the common width.
    """
    problems = []
    forest = tri.forest
    pool = forest.pool
    for a, b in _cell_pairs(tri):
        sa, sb = forest.tarray(a), forest.tarray(b)
        shared = set(sa.vertex_ids) & set(sb.vertex_ids)
        ra = restrict(sa, shared, rule="hyper")
        rb = restrict(sb, shared, rule="hyper")
        alpha = max(ra.hyperlevel, rb.hyperlevel)
        la = lattice_of(ra, pool).refine(alpha)
        lb = lattice_of(rb, pool).refine(alpha)
        if la != lb:
            problems.append(
                f"cells {a} and {b}: intersection sublattices differ on "
                f"{sorted(shared)}"
            )
    return problems
