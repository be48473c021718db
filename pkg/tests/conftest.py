"""Shared mesh factories and independent test oracles."""

from itertools import permutations

import pytest

from bisectmesh import VertexPool, Triangulation, point, kuhn
from bisectmesh.exactgeom import barycentric
from bisectmesh.tarray import TaggedSimplex


def kuhn_square():
    """Unit square split along the diagonal; both refinement edges on it."""
    pool = VertexPool()
    a = pool.id_of(point(0, 0))
    b = pool.id_of(point(1, 0))
    c = pool.id_of(point(1, 1))
    d = pool.id_of(point(0, 1))
    cells = [TaggedSimplex((a, b, c), ()), TaggedSimplex((a, d, c), ())]
    return Triangulation.from_cells(pool, cells)


def kuhn_cube_cells(n, pool=None):
    """The n! full-type simplices triangulating the unit n-cube."""
    pool = pool or VertexPool()
    cells = [
        kuhn(list(perm), [1] * n, pool).vertex_ids
        for perm in permutations(range(1, n + 1))
    ]
    return pool, cells


def kuhn_cube_mesh(n):
    pool, cells = kuhn_cube_cells(n)
    return Triangulation.from_cells(pool, [TaggedSimplex(c, ()) for c in cells])


def single_kuhn(n):
    pool = VertexPool()
    return Triangulation.from_cells(pool, [kuhn(list(range(1, n + 1)), [1] * n, pool)])


def tripled_triangle_pair():
    """Two triangles scaled by 3 so that all barycentres are dyadic."""
    pool = VertexPool()
    p1 = pool.id_of(point(0, 0))
    p2 = pool.id_of(point(6, 0))
    p3 = pool.id_of(point(3, 3))
    p4 = pool.id_of(point(9, 3))
    return pool, [(p1, p2, p3), (p2, p3, p4)], (p1, p2, p3, p4)


def tripled_tet():
    pool = VertexPool()
    vs = tuple(
        pool.id_of(point(*q)) for q in [(0, 0, 0), (3, 0, 0), (3, 3, 0), (3, 3, 3)]
    )
    return pool, [vs]


def find_hanging(tri):
    """Independent hanging-node scan: (vertex id, leaf id) pairs."""
    forest = tri.forest
    pool = forest.pool
    out = []
    leaf_pts = {
        leaf: forest.tarray(leaf).vertices(pool) for leaf in tri.leaves
    }
    for vid in tri.vertex_index:
        p = pool.point(vid)
        for leaf, pts in leaf_pts.items():
            if vid in forest.tarray(leaf).vertex_ids:
                continue
            if barycentric(p, pts) is not None:
                out.append((vid, leaf))
    return out


def naive_repair_oracle(tri, marked):
    """Bisect the marked leaf, then repeatedly bisect any leaf carrying a
    hanging vertex.  Every step is forced, so the result is the coarsest
    conforming refinement strictly finer than the marked cell."""
    tri.bisect_leaf(marked)
    for _ in range(100_000):
        hanging = find_hanging(tri)
        if not hanging:
            return tri
        tri.bisect_leaf(hanging[0][1])
    raise AssertionError("naive repair did not terminate")


def staircase_mesh(steps):
    """Kuhn triangle graded towards its right-angle corner: bisecting the
    smallest cell forces a cascade through every stair."""
    from bisectmesh.refine import refine

    tri = single_kuhn(2)
    forest = tri.forest
    pool = forest.pool
    corner = point(1, 0)
    for _ in range(steps):
        containing = [
            leaf
            for leaf in tri.leaves
            if barycentric(corner, forest.tarray(leaf).vertices(pool)) is not None
        ]
        deepest = max(containing, key=lambda nid: (forest.tarray(nid).level, -nid))
        refine(tri, deepest)
    return tri


@pytest.fixture
def square():
    return kuhn_square()
