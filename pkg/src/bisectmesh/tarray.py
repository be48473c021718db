"""Tagged simplices (T-arrays) and the operations the bisection rule needs.

A T-array arranges the vertices of a simplex into an ordered horizontal row
``(p0 ... pk)`` and a vertical column ``(p_{k+1} ... p_m)``.  The type is
``k``; bisection decrements it, transposition of a type-0 array resets it to
full and increments the hyperlevel.  Vertices are ids into a global
:class:`VertexPool` keyed by exact coordinates, so identity checks on new
vertices are id comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .exactgeom import (
    Dyadic,
    DyadicPoint,
    midpoint,
    simplex_volume,
    _solve_fraction_system,
)


class VertexPool:
    """Interns exact points; equal coordinates always map to the same id."""

    def __init__(self):
        self.points: list[DyadicPoint] = []
        self._index: dict[DyadicPoint, int] = {}

    def id_of(self, p: DyadicPoint) -> int:
        vid = self._index.get(p)
        if vid is None:
            vid = len(self.points)
            self.points.append(p)
            self._index[p] = vid
        return vid

    def point(self, vid: int) -> DyadicPoint:
        return self.points[vid]

    def midpoint_id(self, a: int, b: int) -> int:
        return self.id_of(midpoint(self.points[a], self.points[b]))

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class Edge:
    """Unordered pair of vertex ids, optionally carrying an edge hyperlevel."""

    a: int
    b: int
    hyperlevel: Optional[int] = None

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("edge endpoints must be distinct")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)

    @property
    def ids(self) -> frozenset:
        return frozenset((self.a, self.b))

    def same_edge(self, other: "Edge") -> bool:
        """Geometric equality, ignoring the hyperlevel annotation."""
        return self.a == other.a and self.b == other.b


@dataclass(frozen=True)
class TaggedSimplex:
    horizontal: tuple[int, ...]
    vertical: tuple[int, ...]
    level: int = 0
    hyperlevel: int = 0

    def __post_init__(self):
        if not self.horizontal:
            raise ValueError("horizontal part must not be empty")
        ids = self.horizontal + self.vertical
        if len(set(ids)) != len(ids):
            raise ValueError("repeated vertex in T-array")

    @property
    def type(self) -> int:
        return len(self.horizontal) - 1

    @property
    def dim(self) -> int:
        return len(self.horizontal) + len(self.vertical) - 1

    @property
    def vertex_ids(self) -> tuple[int, ...]:
        return self.horizontal + self.vertical

    def vertices(self, pool: VertexPool) -> list[DyadicPoint]:
        return [pool.point(v) for v in self.vertex_ids]

    def volume(self, pool: VertexPool) -> Fraction:
        return simplex_volume(self.vertices(pool))

    def edges(self) -> list[Edge]:
        ids = self.vertex_ids
        return [
            Edge(ids[i], ids[j])
            for i in range(len(ids))
            for j in range(i + 1, len(ids))
        ]


def transpose(s: TaggedSimplex) -> TaggedSimplex:
    """Turn a type-0 column into the full-type row; hyperlevel increments."""
    if s.type != 0:
        raise ValueError("only type-0 arrays can be transposed")
    return TaggedSimplex(
        s.horizontal + s.vertical, (), level=s.level, hyperlevel=s.hyperlevel + 1
    )


def bisect_points(
    horizontal: Sequence, vertical: Sequence
) -> tuple[tuple, tuple, object]:
    """Children of a T-array given as raw point sequences (type >= 1).

    Returns ``((h1, v1), (h2, v2), new_vertex)``.  The first child keeps the
    tail of the horizontal row, the second the head.
    """
    new = midpoint(horizontal[0], horizontal[-1])
    v = (new, *vertical)
    return (tuple(horizontal[1:]), v), (tuple(horizontal[:-1]), v), new


def bisect(
    s: TaggedSimplex, pool: VertexPool
) -> tuple[TaggedSimplex, TaggedSimplex, int]:
    """Bisect a tagged simplex, implicitly transposing type-0 input first.

    Returns the two children and the id of the new vertex (the midpoint of
    the refinement edge).  Level increments by one; the hyperlevel increments
    exactly when the implicit transposition happens.
    """
    if s.dim < 1:
        raise ValueError("cannot bisect a 0-dimensional simplex")
    if s.type == 0:
        s = transpose(s)
    new_id = pool.midpoint_id(s.horizontal[0], s.horizontal[-1])
    vert = (new_id, *s.vertical)
    child1 = TaggedSimplex(
        s.horizontal[1:], vert, level=s.level + 1, hyperlevel=s.hyperlevel
    )
    child2 = TaggedSimplex(
        s.horizontal[:-1], vert, level=s.level + 1, hyperlevel=s.hyperlevel
    )
    return child1, child2, new_id


def refinement_edge(s: TaggedSimplex) -> Edge:
    """Edge (p0, pk) that bisection splits; for type 0 that of the transposed.

    The edge carries the hyperlevel of the (possibly implicitly transposed)
    array.
    """
    if s.type >= 1:
        return Edge(s.horizontal[0], s.horizontal[-1], hyperlevel=s.hyperlevel)
    if s.dim == 0:
        raise ValueError("0-dimensional array has no refinement edge")
    return Edge(s.horizontal[0], s.vertical[-1], hyperlevel=s.hyperlevel + 1)


def reflect(s: TaggedSimplex) -> TaggedSimplex:
    """Reverse the horizontal row; children coincide up to reflexion."""
    return TaggedSimplex(
        tuple(reversed(s.horizontal)), s.vertical, s.level, s.hyperlevel
    )


def canonicalize(s: TaggedSimplex) -> TaggedSimplex:
    """Unique representative of the class of ``s`` under reflexion and
    transposition.

    Mid-type arrays are identified with their reflexion only; type-0 and
    full-type arrays of the same vertex chain are all identified and stored
    untransposed (type 0).  The representative carries no level or hyperlevel
    data (both zeroed); coincidence predicates that care about hyperlevels
    compare them separately.
    """
    if 0 < s.type < s.dim:
        h = min(s.horizontal, tuple(reversed(s.horizontal)))
        return TaggedSimplex(h, s.vertical, 0, 0)
    chain = s.vertex_ids
    chain = min(chain, tuple(reversed(chain)))
    return TaggedSimplex(chain[:1], chain[1:], 0, 0)


def restrict(
    s: TaggedSimplex, subset: Iterable[int], rule: str = "legacy"
) -> TaggedSimplex:
    """Restrict a T-array to a subset of its vertices.

    Remaining entries are pushed together preserving order.  Under
    ``rule="hyper"`` a restriction without any horizontal vertex is
    transposed (full type) and its hyperlevel incremented; under
    ``rule="legacy"`` it becomes the untransposed column and the hyperlevel
    is not touched.
    """
    subset = set(subset)
    if not subset:
        raise ValueError("empty restriction")
    extra = subset - set(s.vertex_ids)
    if extra:
        raise ValueError(f"vertices {sorted(extra)} not in the T-array")
    hor = tuple(v for v in s.horizontal if v in subset)
    ver = tuple(v for v in s.vertical if v in subset)
    if rule == "legacy":
        if hor:
            return TaggedSimplex(hor, ver, 0, s.hyperlevel)
        return TaggedSimplex(ver[:1], ver[1:], 0, s.hyperlevel)
    if rule == "hyper":
        if hor:
            return TaggedSimplex(hor, ver, 0, s.hyperlevel)
        return TaggedSimplex(ver, (), 0, s.hyperlevel + 1)
    raise ValueError(f"unknown restriction rule {rule!r}")


def kuhn(
    permutation: Sequence[int],
    signs: Sequence[int],
    pool: VertexPool,
    offset: Optional[DyadicPoint] = None,
    hyperlevel: int = 0,
) -> TaggedSimplex:
    """Full-type Kuhn simplex: successive vertex differences are signed
    canonical unit vectors ``eps_j * e_{sigma(j)}``."""
    n = len(permutation)
    if sorted(permutation) != list(range(1, n + 1)):
        raise ValueError("permutation must reorder 1..n")
    if len(signs) != n or any(e not in (1, -1) for e in signs):
        raise ValueError("signs must be +-1 of length n")
    if offset is None:
        offset = DyadicPoint([0] * n)
    pts = [offset]
    for j in range(n):
        coords = list(pts[-1].coords)
        axis = permutation[j] - 1
        coords[axis] = coords[axis] + Dyadic(signs[j])
        pts.append(DyadicPoint(coords))
    return TaggedSimplex(
        tuple(pool.id_of(p) for p in pts), (), level=0, hyperlevel=hyperlevel
    )


class ChebyshevLattice:
    """The unique scaled integer lattice in which a T-array is a reference
    simplex.

    ``points = origin + Z-combinations of basis``; one basis step has length
    ``2**-width_exp`` in the lattice's max-norm.
    """

    def __init__(self, origin: DyadicPoint, basis: Sequence[DyadicPoint], width_exp: int):
        self.origin = origin
        self.basis = tuple(basis)
        self.width_exp = width_exp

    def refine(self, width_exp: int) -> "ChebyshevLattice":
        """Shrink to width 2**-width_exp (a multiple refinement of this one)."""
        if width_exp < self.width_exp:
            raise ValueError("refinement must not coarsen the lattice")
        k = self.width_exp - width_exp
        return ChebyshevLattice(
            self.origin, [b.scale_pow2(k) for b in self.basis], width_exp
        )

    def coefficients(self, vector: DyadicPoint):
        """Exact basis coefficients of a vector, or None if outside the span."""
        m = len(self.basis)
        if m == 0:
            return [] if all(c.num == 0 for c in vector.coords) else None
        n = vector.dim
        cols = [b.as_fractions() for b in self.basis]
        target = vector.as_fractions()
        gram = [
            [sum(cols[i][d] * cols[j][d] for d in range(n)) for j in range(m)]
            for i in range(m)
        ]
        rhs = [sum(cols[i][d] * target[d] for d in range(n)) for i in range(m)]
        sol = _solve_fraction_system(gram, rhs)
        if sol is None:
            return None
        for d in range(n):
            if sum(sol[i] * cols[i][d] for i in range(m)) != target[d]:
                return None
        return sol

    def __eq__(self, other) -> bool:
        """Exact equality of lattices including their max-norms.

        The change-of-basis matrix must be a signed permutation (the only
        unimodular max-norm isometries) and the origins must differ by a
        lattice vector.
        """
        if not isinstance(other, ChebyshevLattice):
            return NotImplemented
        if self.width_exp != other.width_exp or len(self.basis) != len(other.basis):
            return False
        m = len(self.basis)
        used_rows = set()
        for b in other.basis:
            coeff = self.coefficients(b)
            if coeff is None:
                return False
            nonzero = [(i, c) for i, c in enumerate(coeff) if c != 0]
            if len(nonzero) != 1 or abs(nonzero[0][1]) != 1 or nonzero[0][0] in used_rows:
                return False
            used_rows.add(nonzero[0][0])
        if len(used_rows) != m:
            return False
        shift = self.coefficients(other.origin - self.origin)
        return shift is not None and all(c.denominator == 1 for c in shift)

    def __hash__(self):
        raise TypeError("ChebyshevLattice is not hashable")

    def __repr__(self):
        return (
            f"ChebyshevLattice(origin={self.origin!r}, basis={list(self.basis)!r}, "
            f"width=2^-{self.width_exp})"
        )


def lattice_of(s: TaggedSimplex, pool: VertexPool) -> ChebyshevLattice:
    """Construct the Chebyshev lattice of a T-array.

    The cube of the horizontal part is spanned by its successive differences;
    each vertical vertex extends the cube to the next dimension with itself
    as the new centre.  The final cube's edge vectors generate the lattice,
    one step weighing 2**-hyperlevel.
    """
    pts = s.vertices(pool)
    k = s.type
    origin = pts[0]
    edges = [pts[j] - pts[j - 1] for j in range(1, k + 1)]
    for j in range(k, s.dim):
        half_diag = origin
        for e in edges:
            half_diag = half_diag + e.half()
        new_edge = (pts[j + 1] - half_diag).scale_pow2(1)
        edges.append(new_edge)
    if s.dim > 0 and not _edges_independent(edges):
        raise ValueError("degenerate T-array has no lattice")
    return ChebyshevLattice(origin, edges, s.hyperlevel)


def _edges_independent(edges: list) -> bool:
    """Gram-determinant test rejecting degenerate lattice bases."""
    m = len(edges)
    if m == 0:
        return True
    cols = [e.as_fractions() for e in edges]
    n = len(cols[0])
    gram = [
        [sum(cols[i][d] * cols[j][d] for d in range(n)) for j in range(m)]
        for i in range(m)
    ]
    return _fraction_det(gram) != 0


def _fraction_det(matrix: list) -> Fraction:
    m = [row[:] for row in matrix]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                factor = m[r][col] / inv
                for c in range(col, n):
                    m[r][c] -= factor * m[col][c]
    return det
