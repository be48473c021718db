"""Binary forest of generated simplices and triangulations (leaf sets).

The infinite forest of all bisection descendants is never materialised;
nodes come into existence when a bisection first needs them and are shared
afterwards, so two triangulations refined from the same roots can be
compared, united (overlay) and intersected (underlay) by plain set algebra
on node ids.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional

from .exactgeom import simplex_volume
from .tarray import Edge, TaggedSimplex, VertexPool, bisect


class Node:
    __slots__ = ("tarray", "parent", "children", "v_new", "root", "index")

    def __init__(self, tarray, parent, v_new, root, index):
        self.tarray: TaggedSimplex = tarray
        self.parent: Optional[int] = parent
        self.children: Optional[tuple[int, int]] = None
        self.v_new: Optional[int] = v_new  # vertex created by the bisection
        self.root: int = root  # id of the tree's root node
        self.index = index


class Forest:
    """Arena of tagged-simplex nodes with parent/child links.

    Roots are the initial cells.  ``ensure_children`` memoises bisection, so
    every admissible simplex is represented by at most one node.
    """

    def __init__(self, pool: VertexPool):
        self.pool = pool
        self.nodes: list[Node] = []
        self.roots: list[int] = []
        self._volumes: dict[int, Fraction] = {}

    def add_root(self, tarray: TaggedSimplex) -> int:
        nid = len(self.nodes)
        self.nodes.append(Node(tarray, None, None, nid, nid))
        self.roots.append(nid)
        return nid

    def tarray(self, nid: int) -> TaggedSimplex:
        return self.nodes[nid].tarray

    def ensure_children(self, nid: int) -> tuple[int, int]:
        """Bisect the node unless already done; returns the two child ids."""
        node = self.nodes[nid]
        if node.children is not None:
            return node.children
        c1, c2, v_new = bisect(node.tarray, self.pool)
        i1 = len(self.nodes)
        self.nodes.append(Node(c1, nid, v_new, node.root, i1))
        i2 = len(self.nodes)
        self.nodes.append(Node(c2, nid, v_new, node.root, i2))
        node.children = (i1, i2)
        return node.children

    def parent(self, nid: int) -> Optional[int]:
        return self.nodes[nid].parent

    def sibling(self, nid: int) -> Optional[int]:
        p = self.nodes[nid].parent
        if p is None:
            return None
        a, b = self.nodes[p].children
        return b if nid == a else a

    def ancestors(self, nid: int) -> Iterable[int]:
        p = self.nodes[nid].parent
        while p is not None:
            yield p
            p = self.nodes[p].parent

    def forest_of(self, leaves: Iterable[int]) -> frozenset:
        """fo(P): the leaves together with all their ancestors and all roots."""
        seen = set(self.roots)
        for leaf in leaves:
            nid = leaf
            while nid is not None and nid not in seen:
                seen.add(nid)
                nid = self.nodes[nid].parent
        return frozenset(seen)

    def leaves_of(self, node_set: frozenset) -> set:
        """Leaves of a full subforest given as a node-id set."""
        out = set()
        for nid in node_set:
            ch = self.nodes[nid].children
            if ch is None or ch[0] not in node_set:
                out.add(nid)
        return out

    def volume(self, nid: int) -> Fraction:
        vol = self._volumes.get(nid)
        if vol is None:
            vol = simplex_volume(self.nodes[nid].tarray.vertices(self.pool))
            self._volumes[nid] = vol
        return vol


class Triangulation:
    """A leaf set of the forest plus vertex/edge incidence indices."""

    def __init__(self, forest: Forest, leaves: Iterable[int]):
        self.forest = forest
        self.leaves: set[int] = set(leaves)
        self.edge_index: dict[frozenset, set[int]] = {}
        self.vertex_index: dict[int, set[int]] = {}
        for leaf in self.leaves:
            self._index_leaf(leaf)

    @classmethod
    def from_cells(cls, pool: VertexPool, cells: Iterable[TaggedSimplex]):
        forest = Forest(pool)
        for c in cells:
            forest.add_root(c)
        return cls(forest, list(forest.roots))

    def copy(self) -> "Triangulation":
        return Triangulation(self.forest, self.leaves)

    def _index_leaf(self, nid: int):
        t = self.forest.tarray(nid)
        for e in t.edges():
            self.edge_index.setdefault(e.ids, set()).add(nid)
        for v in t.vertex_ids:
            self.vertex_index.setdefault(v, set()).add(nid)

    def _unindex_leaf(self, nid: int):
        t = self.forest.tarray(nid)
        for e in t.edges():
            sharers = self.edge_index[e.ids]
            sharers.discard(nid)
            if not sharers:
                del self.edge_index[e.ids]
        for v in t.vertex_ids:
            sharers = self.vertex_index[v]
            sharers.discard(nid)
            if not sharers:
                del self.vertex_index[v]

    def bisect_leaf(self, nid: int) -> tuple[int, int]:
        """Replace a leaf by its two children; no conformity closure here."""
        if nid not in self.leaves:
            raise ValueError(f"node {nid} is not a leaf of this triangulation")
        c1, c2 = self.forest.ensure_children(nid)
        self.leaves.remove(nid)
        self._unindex_leaf(nid)
        for c in (c1, c2):
            self.leaves.add(c)
            self._index_leaf(c)
        return c1, c2

    def edge_sharers(self, edge: Edge) -> set:
        return set(self.edge_index.get(edge.ids, ()))

    def cells(self) -> list[TaggedSimplex]:
        return [self.forest.tarray(nid) for nid in sorted(self.leaves)]

    def total_volume(self) -> Fraction:
        return sum((self.forest.volume(nid) for nid in self.leaves), Fraction(0))

    def node_set(self) -> frozenset:
        return self.forest.forest_of(self.leaves)


def forest_size_identity(tri: Triangulation) -> tuple[int, int, int]:
    """The three counts of the counting theorem; the caller asserts equality.

    Returns ``(#cells - #initial, #non-leaves, #(forest \\ roots) / 2)``.
    """
    forest = tri.forest
    nodes = tri.node_set()
    cells_minus_initial = len(tri.leaves) - len(forest.roots)
    nonleaves = sum(1 for nid in nodes if nid not in tri.leaves)
    nonroot = len(nodes) - len(forest.roots)
    half, rem = divmod(nonroot, 2)
    if rem:
        return cells_minus_initial, nonleaves, -1
    return cells_minus_initial, nonleaves, half


def finer(p: Triangulation, q: Triangulation) -> bool:
    """True iff fo(P) is a superset of fo(Q); requires the same root set."""
    _require_same_roots(p, q)
    return p.node_set() >= q.node_set()


def overlay(p: Triangulation, q: Triangulation) -> Triangulation:
    """Coarsest common refinement: leaves of the union of the forests."""
    _require_same_roots(p, q)
    union = p.node_set() | q.node_set()
    return Triangulation(p.forest, p.forest.leaves_of(union))


def underlay(p: Triangulation, q: Triangulation) -> Triangulation:
    """Finest common recoarsement: leaves of the intersection of the forests."""
    _require_same_roots(p, q)
    inter = p.node_set() & q.node_set()
    return Triangulation(p.forest, p.forest.leaves_of(inter))


def _require_same_roots(p: Triangulation, q: Triangulation):
    if p.forest is not q.forest:
        raise ValueError("triangulations must share one forest arena")


def demands0(forest: Forest, t: int, s: int) -> bool:
    """T demands S because both were created by the same new vertex."""
    nt, ns = forest.nodes[t], forest.nodes[s]
    return nt.v_new is not None and nt.v_new == ns.v_new


def demands1(forest: Forest, t: int, s: int) -> bool:
    """T demands S because S's new vertex created T's parent."""
    nt, ns = forest.nodes[t], forest.nodes[s]
    if nt.parent is None or ns.v_new is None:
        return False
    pa = forest.nodes[nt.parent]
    return pa.v_new is not None and pa.v_new == ns.v_new


def demands01(forest: Forest, t: int, s: int) -> bool:
    return demands0(forest, t, s) or demands1(forest, t, s)


def closure01(forest: Forest, seeds: Iterable[int]) -> frozenset:
    """Smallest demand-closed node set containing the seeds and the roots.

    The demand targets of a node T are its 0-class (nodes sharing its new
    vertex) and the 0-class of its parent's new vertex.  The closure is
    taken over the *generated* part of the forest, so the caller must have
    materialised the relevant region first, e.g. by running :func:`tower`
    (which refines a scratch copy through the shared arena) or by expanding
    every node down to the seed's level: demands never point to deeper
    levels.
    """
    by_v_new: dict[int, list[int]] = {}
    for node in forest.nodes:
        if node.v_new is not None:
            by_v_new.setdefault(node.v_new, []).append(node.index)
    closed = set(forest.roots)
    stack = list(seeds)
    while stack:
        nid = stack.pop()
        if nid in closed:
            continue
        closed.add(nid)
        node = forest.nodes[nid]
        if node.v_new is not None:
            for other in by_v_new[node.v_new]:
                if other not in closed:
                    stack.append(other)
        if node.parent is not None:
            pa = forest.nodes[node.parent]
            if pa.v_new is not None:
                for other in by_v_new[pa.v_new]:
                    if other not in closed:
                        stack.append(other)
    return frozenset(closed)


def verify_forest_characterisation(tri: Triangulation) -> list[str]:
    """Check the vertex-set characterisation of an admissible forest.

    (a) The non-root nodes of fo(P) are exactly the generated nodes whose
    new vertex belongs to V = new vertices of fo(P);  (b) V is closed under
    the vertex demand relation: the parent's new vertex of any non-root node
    with a non-root parent is again in V.  Returns a list of violation
    messages (empty = pass).
    """
    forest = tri.forest
    nodes = tri.node_set()
    problems = []
    v_set = {
        forest.nodes[nid].v_new
        for nid in nodes
        if forest.nodes[nid].v_new is not None
    }
    for node in forest.nodes:
        if node.v_new is None:
            continue
        inside = node.index in nodes
        if inside and node.v_new not in v_set:
            problems.append(f"node {node.index}: new vertex escaped V")
        if not inside and node.v_new in v_set:
            problems.append(
                f"node {node.index}: shares new vertex {node.v_new} with the "
                "forest but is missing from it"
            )
    for nid in nodes:
        node = forest.nodes[nid]
        if node.parent is None:
            continue
        pa = forest.nodes[node.parent]
        if pa.v_new is not None and pa.v_new not in v_set:
            problems.append(
                f"node {nid}: parent's new vertex {pa.v_new} not demanded into V"
            )
    return problems


def tower(tri: Triangulation, child_of_leaf: int) -> frozenset:
    """Nodes forced into the forest when the child's parent leaf is refined.

    Computed as fo(refine(P, pa(S))) minus fo(P) on a scratch copy; the
    demand-closure characterisation is used as an independent oracle in the
    test-suite, not here.
    """
    from .refine import refine  # local import to avoid a cycle

    parent = tri.forest.parent(child_of_leaf)
    if parent is None or parent not in tri.leaves:
        raise ValueError("tower seed must be the child of a current leaf")
    scratch = tri.copy()
    refine(scratch, parent)
    return scratch.node_set() - tri.node_set()
