"""Exact dyadic-rational arithmetic and the geometric predicates of the mesh engine.

Every vertex produced by edge bisection is a dyadic midpoint, so coordinates
are dyadic rationals (integer numerator over a power of two) and vertex
equality is bit-exact.  Volumes and squared distances use general rationals
(``fractions.Fraction``); floats appear only in reporting.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence


class Dyadic:
    """An exact dyadic rational ``numerator / 2**exponent``.

    Canonical form: the fraction is fully reduced, i.e. the numerator is odd
    whenever the exponent is positive, and zero is stored as ``(0, 0)``.
    """

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        if exp < 0:
            num, exp = num << (-exp), 0
        while exp > 0 and num % 2 == 0:
            shift = min(exp, (num & -num).bit_length() - 1) if num else exp
            num >>= shift
            exp -= shift
        if num == 0:
            exp = 0
        self.num = num
        self.exp = exp

    @staticmethod
    def zero() -> "Dyadic":
        return Dyadic(0, 0)

    def __add__(self, other: "Dyadic") -> "Dyadic":
        e = max(self.exp, other.exp)
        return Dyadic((self.num << (e - self.exp)) + (other.num << (e - other.exp)), e)

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        e = max(self.exp, other.exp)
        return Dyadic((self.num << (e - self.exp)) - (other.num << (e - other.exp)), e)

    def __mul__(self, other: "Dyadic") -> "Dyadic":
        return Dyadic(self.num * other.num, self.exp + other.exp)

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.num, self.exp)

    def half(self) -> "Dyadic":
        return Dyadic(self.num, self.exp + 1)

    def double(self) -> "Dyadic":
        return Dyadic(self.num * 2, self.exp)

    def scale_pow2(self, k: int) -> "Dyadic":
        """Return self * 2**k (k may be negative)."""
        return Dyadic(self.num, self.exp - k)

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self) -> float:
        return self.num / (1 << self.exp)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dyadic)
            and self.num == other.num
            and self.exp == other.exp
        )

    def __lt__(self, other: "Dyadic") -> bool:
        return (self.num << other.exp) < (other.num << self.exp)

    def __le__(self, other: "Dyadic") -> bool:
        return (self.num << other.exp) <= (other.num << self.exp)

    def __hash__(self):
        return hash((self.num, self.exp))

    def __repr__(self):
        return f"Dyadic({self.num}, {self.exp})"

    def __str__(self):
        return str(self.num) if self.exp == 0 else f"{self.num}/2^{self.exp}"


def dyadic(value) -> Dyadic:
    """Coerce an int, Fraction with power-of-two denominator, or Dyadic."""
    if isinstance(value, Dyadic):
        return value
    if isinstance(value, int):
        return Dyadic(value, 0)
    if isinstance(value, Fraction):
        den = value.denominator
        if den & (den - 1):
            raise ValueError(f"{value} is not a dyadic rational")
        return Dyadic(value.numerator, den.bit_length() - 1)
    raise TypeError(f"cannot interpret {value!r} as a dyadic rational")


class DyadicPoint:
    """A point with exact dyadic coordinates."""

    __slots__ = ("coords",)

    def __init__(self, coords: Iterable):
        self.coords = tuple(dyadic(c) for c in coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __add__(self, other: "DyadicPoint") -> "DyadicPoint":
        return DyadicPoint(a + b for a, b in zip(self.coords, other.coords))

    def __sub__(self, other: "DyadicPoint") -> "DyadicPoint":
        return DyadicPoint(a - b for a, b in zip(self.coords, other.coords))

    def half(self) -> "DyadicPoint":
        return DyadicPoint(c.half() for c in self.coords)

    def scale_pow2(self, k: int) -> "DyadicPoint":
        return DyadicPoint(c.scale_pow2(k) for c in self.coords)

    def as_fractions(self) -> tuple:
        return tuple(c.as_fraction() for c in self.coords)

    def __eq__(self, other) -> bool:
        return isinstance(other, DyadicPoint) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return "DyadicPoint(" + ", ".join(str(c) for c in self.coords) + ")"


def point(*coords) -> DyadicPoint:
    """Convenience constructor: ``point(0, Fraction(1, 2))``."""
    return DyadicPoint(coords)


def midpoint(a: DyadicPoint, b: DyadicPoint) -> DyadicPoint:
    """Exact midpoint (a + b) / 2 of two points of equal dimension."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} != {b.dim}")
    return (a + b).half()


def _int_det(rows: list) -> int:
    """Determinant of an integer matrix by fraction-free Bareiss elimination."""
    m = [list(r) for r in rows]
    n = len(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def simplex_volume(vertices: Sequence[DyadicPoint]) -> Fraction:
    """Exact volume |det(p1-p0, ..., pn-p0)| / n! of an n-simplex.

    A degenerate simplex yields volume 0; that is a valid return value.
    """
    n = len(vertices) - 1
    if n == 0:
        return Fraction(0)
    if any(v.dim != n for v in vertices):
        raise ValueError("need n+1 points of dimension n")
    p0 = vertices[0]
    diffs = [v - p0 for v in vertices[1:]]
    e = max((c.exp for d in diffs for c in d.coords), default=0)
    rows = [[c.num << (e - c.exp) for c in d.coords] for d in diffs]
    det = _int_det(rows)
    return Fraction(abs(det), (1 << (n * e)) * math.factorial(n))


def _solve_fraction_system(matrix: list, rhs: list):
    """Solve a square linear system exactly over Fractions; None if singular."""
    n = len(matrix)
    a = [[Fraction(x) for x in row] + [Fraction(rhs[i])] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        inv = a[col][col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col] / inv
                for c in range(col, n + 1):
                    a[r][c] -= factor * a[col][c]
    return [a[r][n] / a[r][r] for r in range(n)]


def barycentric(pt: DyadicPoint, simplex: Sequence[DyadicPoint]):
    """Exact barycentric coordinates of ``pt`` w.r.t. a non-degenerate simplex.

    Returns the list of Fractions (all >= 0, summing to 1) when the point lies
    in the simplex, or None when it lies outside.  Works for a k-simplex
    embedded in n-space; a point off the affine hull counts as outside.
    """
    k = len(simplex) - 1
    p0 = simplex[0]
    basis = [(v - p0).as_fractions() for v in simplex[1:]]
    target = (pt - p0).as_fractions()
    n = pt.dim
    # Solve least-squares-free: use the Gram system B^T B x = B^T t, exact.
    gram = [[sum(basis[i][d] * basis[j][d] for d in range(n)) for j in range(k)] for i in range(k)]
    gt = [sum(basis[i][d] * target[d] for d in range(n)) for i in range(k)]
    sol = _solve_fraction_system(gram, gt) if k else []
    if sol is None:
        raise ValueError("degenerate simplex")
    # Residual must vanish for the point to lie in the affine hull.
    for d in range(n):
        if sum(sol[i] * basis[i][d] for i in range(k)) != target[d]:
            return None
    lam0 = 1 - sum(sol, Fraction(0))
    coords = [lam0, *sol]
    if any(c < 0 for c in coords):
        return None
    return coords


def sq_dist(a: DyadicPoint, b: DyadicPoint) -> Fraction:
    """Exact squared Euclidean distance."""
    return sum(((x - y).as_fraction() ** 2 for x, y in zip(a.coords, b.coords)), Fraction(0))


def max_sq_dist_from(pt: DyadicPoint, simplex: Sequence[DyadicPoint]) -> Fraction:
    """Max squared distance from ``pt`` to a simplex; attained at a vertex."""
    return max(sq_dist(pt, v) for v in simplex)
