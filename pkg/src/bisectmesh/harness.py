"""Closure-bound constants, refinement-sequence driver, and bound checks.

The volume floor d is exact (it is invariant under bisection).  The distance
ceiling D is certified by enumerating the finitely many shape classes of
descendants: shapes are normalised by the hyperlevel scaling, under which
the class set is closed, so the breadth-first closure terminates exactly.
All bound comparisons pit exact integers against upward-rounded products,
so a reported violation is never a rounding artefact.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .exactgeom import DyadicPoint, simplex_volume, sq_dist
from .tarray import TaggedSimplex, bisect_points
from .forest import Triangulation, forest_size_identity
from .refine import RefineRecord, refine


def unit_ball_volume(m: int) -> float:
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


def _exact_nth_root(value: Fraction, k: int) -> Optional[Fraction]:
    def iroot(x: int) -> Optional[int]:
        if x < 0:
            return None
        if x < 2:
            return x
        try:
            r = round(x ** (1.0 / k))
        except OverflowError:
            r = 1 << ((x.bit_length() + k - 1) // k)
            while True:
                nr = ((k - 1) * r + x // r ** (k - 1)) // k
                if nr >= r:
                    break
                r = nr
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**k == x:
                return cand
        return None

    num, den = iroot(value.numerator), iroot(value.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den)


@dataclass
class ShapeCensus:
    """Certificate of the shape-class enumeration of one root."""

    classes: int
    generations: int
    settled: bool
    max_v_pow_2n: Fraction  # sup over descendants of (2^(l/n) dist(V_new))^(2n)
    max_iso_sq: Fraction  # sup over the tree of (2^h diam)^2


def _shape_key(t: int, pts: Sequence[DyadicPoint]):
    p0 = pts[0]
    return (t, tuple((p - p0).coords for p in pts[1:]))


def _diam_sq(pts: Sequence[DyadicPoint]) -> Fraction:
    return max(
        sq_dist(pts[i], pts[j])
        for i in range(len(pts))
        for j in range(i + 1, len(pts))
    )


def shape_census(
    root: TaggedSimplex,
    pool,
    settle_depth: Optional[int] = None,
    max_generations: int = 400,
    max_classes: int = 500_000,
) -> ShapeCensus:
    """Walk all descendant shape classes of one root.

    A class is a T-array modulo translation after scaling by ``2**(h - h_root)``;
    bisection maps classes to classes and transposition doubles the scale, so
    the class set is finite and the walk stops when a full generation brings
    nothing new (``settle_depth`` consecutive generations, default 1, which
    is exact for this closure).
    """
    n = root.dim
    settle = settle_depth if settle_depth is not None else 1
    pts = [pool.point(v) for v in root.vertex_ids]
    c0 = Fraction(2) ** root.level * simplex_volume(pts) if n else Fraction(0)
    iso_scale_sq = Fraction(4) ** root.hyperlevel
    best_iso = iso_scale_sq * _diam_sq(pts)
    best_v = Fraction(0)
    seen = {_shape_key(root.type, pts)}
    frontier = [(root.type, tuple(pts))]
    generations = 0
    quiet = 0
    while frontier and generations < max_generations and len(seen) < max_classes:
        generations += 1
        next_frontier = []
        for t, shape in frontier:
            if t == 0:
                shape = tuple(p.scale_pow2(1) for p in shape)
                t = n
            (h1, v1), (h2, v2), new = bisect_points(shape[: t + 1], shape[t + 1 :])
            for hor, ver in ((h1, v1), (h2, v2)):
                child = hor + ver
                child_t = len(hor) - 1
                d_sq = max(sq_dist(new, p) for p in child)
                vol = simplex_volume(child)
                value = c0**2 * d_sq**n / vol**2
                if value > best_v:
                    best_v = value
                iso = iso_scale_sq * _diam_sq(child)
                if iso > best_iso:
                    best_iso = iso
                key = _shape_key(child_t, child)
                if key not in seen:
                    seen.add(key)
                    next_frontier.append((child_t, child))
        frontier = next_frontier
        quiet = quiet + 1 if not next_frontier else 0
        if quiet >= settle:
            break
    return ShapeCensus(
        classes=len(seen),
        generations=generations,
        settled=not frontier,
        max_v_pow_2n=best_v,
        max_iso_sq=best_iso,
    )


def compute_d(tri: Triangulation) -> Fraction:
    """Volume floor: min over initial cells of 2^level |S| (exact)."""
    forest = tri.forest
    return min(
        Fraction(2) ** forest.tarray(r).level * forest.volume(r)
        for r in forest.roots
    )


def compute_d_iso(tri: Triangulation) -> Fraction:
    """Hyperlevel volume floor: min over cells of 2^(n h + n - t) |S|; the
    exponent is invariant under both bisection and transposition."""
    forest = tri.forest
    best = None
    for r in forest.roots:
        t = forest.tarray(r)
        n = t.dim
        value = Fraction(2) ** (n * t.hyperlevel + n - t.type) * forest.volume(r)
        best = value if best is None else min(best, value)
    return best


def compute_D(tri: Triangulation, settle_depth: Optional[int] = None):
    """Distance ceilings with enumeration certificates.

    Returns ``(v_pow_2n, iso_sq, census_list)`` where ``v_pow_2n`` is the
    exact 2n-th power of sup 2^(level/n) dist(new vertex) and ``iso_sq`` the
    exact square of sup 2^hyperlevel diam.
    """
    forest = tri.forest
    censuses = [
        shape_census(forest.tarray(r), forest.pool, settle_depth)
        for r in forest.roots
    ]
    return (
        max(c.max_v_pow_2n for c in censuses),
        max(c.max_iso_sq for c in censuses),
        censuses,
    )


def c_sic(d: Fraction, D: float, n: int) -> float:
    """Closure-estimate constant: D^n V_n / (2 (1 - 2^(-1/n))^n d)."""
    v_n = unit_ball_volume(n)
    return D**n * v_n / (2 * (1 - 2 ** (-1 / n)) ** n * float(d))


def c_iso(d: Fraction, D: float, n: int) -> tuple[float, int]:
    """Hyperlevel closure constant and the initial-layer factor 2^(n h0).

    2C = (D^n / d) (2^n - 1) 2^(n h0 + 1) ((n + 2^n) V_n + 2 V_{n-1}),
    h0 = 2 + floor(log2 n); the bound reads
    #T_N <= 2^(n h0) #T_0 + C N.
    """
    h0 = 2 + int(math.log2(n))
    two_c = (
        (D**n / float(d))
        * (2**n - 1)
        * 2 ** (n * h0 + 1)
        * ((n + 2**n) * unit_ball_volume(n) + 2 * unit_ball_volume(n - 1))
    )
    return two_c / 2, 2 ** (n * h0)


@dataclass
class Constants:
    n: int
    d: Fraction
    D: float
    D_squared: Optional[Fraction]
    D_pow_2n: Fraction
    C_sic: float
    d_iso: Fraction
    D_iso: float
    D_iso_squared: Fraction
    C_iso: float
    first_summand_factor: int
    h0: int
    settled: bool
    classes: int
    generations: int

    def coarse_first_summand(self, v0_empty: bool = False) -> int:
        base = 4 * self.n if v0_empty else 8 * self.n
        return base**self.n


def compute_constants(tri: Triangulation, settle_depth: Optional[int] = None) -> Constants:
    n = tri.forest.tarray(tri.forest.roots[0]).dim
    d = compute_d(tri)
    d_iso = compute_d_iso(tri)
    v2n, iso_sq, censuses = compute_D(tri, settle_depth)
    D = float(v2n) ** (1 / (2 * n))
    D_sq = _exact_nth_root(v2n, n)
    D_iso = math.sqrt(float(iso_sq))
    C = c_sic(d, D, n)
    Ci, factor = c_iso(d_iso, D_iso, n)
    return Constants(
        n=n,
        d=d,
        D=D,
        D_squared=D_sq,
        D_pow_2n=v2n,
        C_sic=C,
        d_iso=d_iso,
        D_iso=D_iso,
        D_iso_squared=iso_sq,
        C_iso=Ci,
        first_summand_factor=factor,
        h0=2 + int(math.log2(n)),
        settled=all(c.settled for c in censuses),
        classes=sum(c.classes for c in censuses),
        generations=max(c.generations for c in censuses),
    )


# --- refinement sequences -----------------------------------------------------


@dataclass
class Trace:
    mesh_hash: str
    strategy: str
    seed: Optional[int]
    n: int
    initial_cells: int
    rows: list = field(default_factory=list)
    # row: (round, marked_cell, cells_added, cells_total, forest_nonroot, jump)

    @property
    def rounds(self) -> int:
        return len(self.rows)

    @property
    def final_cells(self) -> int:
        return self.rows[-1][3] if self.rows else self.initial_cells

    @property
    def max_jump(self) -> int:
        return max((r[5] for r in self.rows), default=0)

    def csv_lines(self, bound_per_round: float = 0.0) -> list[str]:
        lines = ["round,marked_cell,cells_added,cells_total,forest_nonroot,bound,ratio"]
        for rnd, cell, added, total, nonroot, _ in self.rows:
            bound = bound_per_round * rnd
            grown = total - self.initial_cells
            ratio = grown / bound if bound else 0.0
            lines.append(
                f"{rnd},{cell},{added},{total},{nonroot},{bound:.6g},{ratio:.6g}"
            )
        return lines


class SequenceError(AssertionError):
    """An invariant (counting identity, volume conservation) broke mid-run."""


def _pick_random(rng, leafbuf, leaves):
    while True:
        i = rng.randrange(len(leafbuf))
        if leafbuf[i] in leaves:
            return leafbuf[i]
        leafbuf[i] = leafbuf[-1]
        leafbuf.pop()


def run_sequence(
    tri: Triangulation,
    strategy: str,
    n_rounds: int,
    seed: Optional[int] = None,
    full_check_every: int = 0,
) -> Trace:
    """Drive N single-marking refinement rounds, asserting the counting
    identity, exact volume conservation, and conformity after every round.

    The conformity assertion is exact and cheap: starting from a conforming
    mesh, the only hanging candidates after a round are the new midpoints,
    and a midpoint hangs exactly when its bisected edge still occurs in the
    edge index.  Strategies: ``random-leaf``, ``max-level-leaf``,
    ``staircase-adversary`` (lowest-level neighbour of the previous round's
    new cells), ``quasitower-adversary`` (alternating deep and shallow
    picks).
    """
    from .meshio import mesh_hash
    from .tarray import refinement_edge

    forest = tri.forest
    pool = forest.pool
    n = forest.tarray(forest.roots[0]).dim
    rng = random.Random(seed)
    trace = Trace(mesh_hash(tri), strategy, seed, n, len(tri.leaves))
    leafbuf = list(tri.leaves)
    initial_cells = len(tri.leaves)
    initial_volume = tri.total_volume()
    bisections = 0
    last_created: list[int] = []

    def pick() -> int:
        if strategy == "random-leaf":
            return _pick_random(rng, leafbuf, tri.leaves)
        if strategy == "max-level-leaf":
            return max(tri.leaves, key=lambda nid: (forest.tarray(nid).level, -nid))
        if strategy == "staircase-adversary":
            cand = set()
            for nid in last_created:
                for v in forest.tarray(nid).vertex_ids:
                    cand.update(tri.vertex_index.get(v, ()))
            cand &= tri.leaves
            if not cand:
                cand = tri.leaves
            return min(cand, key=lambda nid: (forest.tarray(nid).level, nid))
        if strategy == "quasitower-adversary":
            if trace.rounds % 4 == 3:
                return min(tri.leaves, key=lambda nid: (forest.tarray(nid).level, nid))
            return max(tri.leaves, key=lambda nid: (forest.tarray(nid).level, -nid))
        raise ValueError(f"unknown strategy {strategy!r}")

    for rnd in range(1, n_rounds + 1):
        marked = pick()
        rec = RefineRecord()
        refine(tri, marked, record=rec)
        last_created = []
        for node_id, _ in rec.bisections:
            c1, c2 = forest.nodes[node_id].children
            if forest.volume(c1) + forest.volume(c2) != forest.volume(node_id):
                raise SequenceError(f"round {rnd}: children do not partition cell {node_id}")
            edge = refinement_edge(forest.tarray(node_id))
            if edge.ids in tri.edge_index:
                raise SequenceError(
                    f"round {rnd}: bisected edge {set(edge.ids)} still carried "
                    "by a leaf (hanging node)"
                )
            leafbuf.extend((c1, c2))
            last_created.extend((c1, c2))
        bisections += rec.cells_added
        cells_total = len(tri.leaves)
        nonroot = 2 * bisections
        if cells_total - initial_cells != bisections:
            raise SequenceError(f"round {rnd}: counting identity broken")
        trace.rows.append(
            (rnd, marked, rec.cells_added, cells_total, nonroot, rec.max_jump(forest))
        )
        if full_check_every and rnd % full_check_every == 0:
            _full_invariants(tri, initial_volume, bisections)
    _full_invariants(tri, initial_volume, bisections)
    return trace


def _full_invariants(tri: Triangulation, initial_volume: Fraction, bisections: int):
    if tri.total_volume() != initial_volume:
        raise SequenceError("total leaf volume drifted from the initial volume")
    a, b, c = forest_size_identity(tri)
    if not (a == b == c == bisections):
        raise SequenceError(f"counting identity violated: {a}, {b}, {c}, {bisections}")


def upper_bound_int(constant: float, k: int) -> int:
    """ceil(constant * k) with the product rounded upwards, so an exact count
    comparing <= against it can never be falsely flagged."""
    safe = Fraction(constant) * (1 + Fraction(1, 10**9)) * k
    return math.ceil(safe)


def verify_bdv(trace: Trace, constants: Constants, mode: str) -> list[str]:
    """Check the closure estimate for every prefix of the trace.

    ``sic``: #T_k - #T_0 <= C_sic k.  ``iso``: #T_k - #T_0 <=
    (factor - 1) #T_0 + C_iso k.  Returns violations (empty = pass).
    """
    problems = []
    for rnd, _, _, total, _, _ in trace.rows:
        grown = total - trace.initial_cells
        if mode == "sic":
            bound = upper_bound_int(constants.C_sic, rnd)
        elif mode == "iso":
            bound = (
                (constants.first_summand_factor - 1) * trace.initial_cells
                + upper_bound_int(constants.C_iso, rnd)
            )
        else:
            raise ValueError(f"unknown mode {mode!r}")
        if grown > bound:
            problems.append(
                f"round {rnd}: {grown} cells added exceeds bound {bound}"
            )
            break
    return problems


# --- tower geometry spot check -------------------------------------------------


def hyperlevel_ancestor_vertices(forest, nid: int, h_target: int) -> Optional[tuple]:
    """Vertex ids of the type-n hyperlevel-``h_target`` ancestor simplex.

    In the stored (binary-tree) convention that ancestor is either a type-0
    node of hyperlevel ``h_target - 1`` (its transposed) or a full-type root
    of hyperlevel ``h_target``.
    """
    cur = nid
    while True:
        t = forest.tarray(cur)
        if t.type == 0 and t.hyperlevel == h_target - 1:
            return t.vertex_ids
        parent = forest.parent(cur)
        if parent is None:
            if t.type == t.dim and t.hyperlevel == h_target:
                return t.vertex_ids
            return None
        cur = parent


def tower_patch_spotcheck(
    tri: Triangulation, samples: int = 20, seed: Optional[int] = None
) -> dict:
    """Empirical check that every deep tower layer sits inside one vertex
    patch of the corresponding hyperlevel-uniform triangulation.

    For each sampled child of a leaf with hyperlevel above h0, each layer
    (hyperlevel j > h0, full-type convention) of its tower is mapped to the
    type-n hyperlevel-(j - h0) ancestors of its cells; those ancestors are
    patch cells and must share a vertex.  Returns a report dict.
    """
    from .forest import tower

    forest = tri.forest
    n = forest.tarray(forest.roots[0]).dim
    h0 = 2 + int(math.log2(n))
    rng = random.Random(seed)
    deep = [
        leaf
        for leaf in tri.leaves
        if _effective_hyperlevel(forest.tarray(leaf)) >= h0 + 1
    ]
    rng.shuffle(deep)
    checked = 0
    vacuous = 0
    failures = []
    worst_diameter_ratio = 0.0
    pool = forest.pool

    def diameter_sq(vertex_ids):
        pts = [pool.point(v) for v in vertex_ids]
        return max(
            (sq_dist(p, q) for i, p in enumerate(pts) for q in pts[i + 1 :]),
            default=Fraction(0),
        )

    for leaf in deep[:samples]:
        c1, _ = forest.ensure_children(leaf)
        tw = tower(tri, c1)
        layers: dict[int, list[int]] = {}
        for nid in tw:
            t = forest.tarray(nid)
            layers.setdefault(_effective_hyperlevel(t), []).append(nid)
        for j, nodes in sorted(layers.items()):
            if j < h0 + 1:
                vacuous += 1
                continue
            ancestor_sets = []
            for nid in nodes:
                anc = hyperlevel_ancestor_vertices(forest, nid, j - h0)
                if anc is None:
                    failures.append(f"node {nid}: no hyperlevel-{j - h0} ancestor")
                    continue
                ancestor_sets.append(set(anc))
            if not ancestor_sets:
                continue
            common = set.intersection(*ancestor_sets)
            checked += 1
            if not common:
                failures.append(
                    f"tower of {leaf}, layer {j}: patch cells share no vertex"
                )
                continue
            layer_sq = diameter_sq(
                {v for nid in nodes for v in forest.tarray(nid).vertex_ids}
            )
            patch_sq = diameter_sq(set.union(*ancestor_sets))
            if patch_sq:
                ratio = math.sqrt(float(layer_sq) / float(patch_sq))
                worst_diameter_ratio = max(worst_diameter_ratio, ratio)
    return {
        "sampled": min(samples, len(deep)),
        "layers_checked": checked,
        "vacuous": vacuous,
        "worst_diameter_ratio": worst_diameter_ratio,
        "failures": failures,
    }


def _effective_hyperlevel(t: TaggedSimplex) -> int:
    """Hyperlevel in the full-type convention (type-0 arrays count as their
    transposed)."""
    return t.hyperlevel + 1 if t.type == 0 else t.hyperlevel
