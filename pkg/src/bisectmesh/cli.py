"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 verification failure,
3 refinement failure.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .forest import Triangulation, overlay as overlay_tris
from .harness import compute_constants, run_sequence, verify_bdv
from .inittags import (
    MarkingError,
    VertexPartition,
    agk_init,
    barycentre_marking,
    check_isocochange,
    check_pc,
    check_retaco,
    check_retahyco,
    check_sic,
    initial_division,
)
from .meshio import MeshFormatError, read_mesh, write_mesh
from .pilegame import play
from .refine import (
    RefinementError,
    check_conforming,
    hyperlevel_uniform_refine,
    quasi_uniform_refine,
    refine,
    uniform_refine,
)

EXIT_OK, EXIT_INVALID, EXIT_VERIFY, EXIT_REFINE = 0, 1, 2, 3


def _load(path):
    try:
        return read_mesh(path)
    except (MeshFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _save(args, tri):
    if args.out:
        write_mesh(args.out, tri)
        print(f"wrote {args.out} ({len(tri.leaves)} cells)")
    else:
        print(f"result: {len(tri.leaves)} cells (no --out given, not saved)")


def _cmd_init_division(args):
    tri, marking, _ = _load(args.mesh)
    pool = tri.forest.pool
    cells = [t.vertex_ids for t in tri.cells()]
    try:
        marking = marking or barycentre_marking(pool, cells)
        out = initial_division(pool, cells, marking)
    except MarkingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _save(args, out)
    return EXIT_OK


def _cmd_agk_init(args):
    tri, _, partition = _load(args.mesh)
    pool = tri.forest.pool
    cells = [t.vertex_ids for t in tri.cells()]
    if partition is None:
        vertices = frozenset(v for c in cells for v in c)
        partition = VertexPartition(v0=frozenset(), v1=vertices)
    try:
        out = agk_init(pool, cells, partition)
    except MarkingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _save(args, out)
    return EXIT_OK


_CHECKS = {
    "sic": check_sic,
    "retaco": check_retaco,
    "retahyco": check_retahyco,
    "pc": check_pc,
    "isocochange": check_isocochange,
    "conforming": check_conforming,
}


def _cmd_check(args):
    tri, _, _ = _load(args.mesh)
    checker = _CHECKS[args.what]
    problems = checker(tri, args.depth) if args.what == "sic" and args.depth else checker(tri)
    if problems:
        for p in problems:
            print(p)
        print(f"FAIL {args.what}: {len(problems)} problem(s)")
        return EXIT_VERIFY
    print(f"PASS {args.what}")
    return EXIT_OK


def _cmd_refine(args):
    tri, _, _ = _load(args.mesh)
    leaves = sorted(tri.leaves)
    if not 0 <= args.cell < len(leaves):
        print(f"error: cell index {args.cell} out of range", file=sys.stderr)
        return EXIT_INVALID
    try:
        refine(tri, leaves[args.cell])
    except RefinementError as exc:
        print(f"refinement failed: {exc}", file=sys.stderr)
        return EXIT_REFINE
    _save(args, tri)
    return EXIT_OK


def _cmd_sweep(args, fn, **kw):
    tri, _, _ = _load(args.mesh)
    try:
        fn(tri, **kw)
    except RefinementError as exc:
        print(f"refinement failed: {exc}", file=sys.stderr)
        return EXIT_REFINE
    _save(args, tri)
    return EXIT_OK


def _cmd_constants(args):
    tri, _, _ = _load(args.mesh)
    consts = compute_constants(tri, args.depth or None)
    print(f"n = {consts.n}")
    print(f"d = {consts.d}")
    if consts.D_squared is not None:
        print(f"D = {consts.D:.15g} (D^2 = {consts.D_squared})")
    else:
        print(f"D = {consts.D:.15g} (D^(2n) = {consts.D_pow_2n})")
    print(f"C_sic <= {consts.C_sic:.15g}")
    print(f"d_iso = {consts.d_iso}")
    print(f"D_iso = {consts.D_iso:.15g} (D_iso^2 = {consts.D_iso_squared})")
    print(f"C_iso <= {consts.C_iso:.15g}")
    print(f"bound: #T_N <= {consts.first_summand_factor} #T_0 + C_iso N (h0 = {consts.h0})")
    print(
        f"certificate: {consts.classes} shape classes in {consts.generations} "
        f"generations, settled = {consts.settled}"
    )
    return EXIT_OK if consts.settled else EXIT_VERIFY


def _cmd_bdv_run(args):
    tri, _, _ = _load(args.mesh)
    consts = compute_constants(tri)
    trace = run_sequence(tri, args.strategy, args.rounds, args.seed)
    mode = args.mode or "sic"
    problems = verify_bdv(trace, consts, mode)
    bound = consts.C_sic if mode == "sic" else consts.C_iso
    lines = trace.csv_lines(bound)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    else:
        print("\n".join(lines))
    grown = trace.final_cells - trace.initial_cells
    print(
        f"# strategy={args.strategy} rounds={trace.rounds} grown={grown} "
        f"mode={mode} max_jump={trace.max_jump}"
    )
    if problems:
        for p in problems:
            print(p)
        return EXIT_VERIFY
    print("# bound satisfied in every round")
    return EXIT_OK


def _cmd_pile_game(args):
    trace = play(args.strategy, args.rounds, args.seed)
    lines = trace.csv_lines()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    else:
        print("\n".join(lines))
    total = trace.total_added
    print(f"# total added {total} <= 4N = {4 * args.rounds}: {total <= 4 * args.rounds}")
    return EXIT_OK if total <= 4 * args.rounds else EXIT_VERIFY


def _embed_refinement(base: Triangulation, other: Triangulation):
    """Map every leaf of ``other`` to a node of ``base``'s forest; both must
    refine the same initial cells."""
    forest = base.forest
    pool = forest.pool
    opool = other.forest.pool
    mapped = []
    for leaf in sorted(other.leaves):
        cell = other.forest.tarray(leaf)
        pts = [opool.point(v) for v in cell.vertex_ids]
        k = len(pts)
        centroid_fr = [
            sum(p.coords[d].as_fraction() for p in pts) / k
            for d in range(pts[0].dim)
        ]
        target_points = frozenset(pts)
        node = None
        for r in forest.roots:
            if barycentric_point(centroid_fr, forest, r) is not None:
                node = r
                break
        if node is None:
            return None
        for _ in range(64 * cell.dim * (cell.level + 2)):
            if frozenset(pool.point(v) for v in forest.tarray(node).vertex_ids) == target_points:
                break
            c1, c2 = forest.ensure_children(node)
            node = c1 if barycentric_point(centroid_fr, forest, c1) is not None else c2
        else:
            return None
        mapped.append(node)
    return mapped


def barycentric_point(centroid_fr, forest, nid):
    # centroids have non-dyadic coordinates, so this works over Fractions
    pts = forest.tarray(nid).vertices(forest.pool)
    return _barycentric_fractions(centroid_fr, [p.as_fractions() for p in pts])


def _barycentric_fractions(target, simplex):
    from .exactgeom import _solve_fraction_system

    k = len(simplex) - 1
    p0 = simplex[0]
    n = len(p0)
    basis = [[v[d] - p0[d] for d in range(n)] for v in simplex[1:]]
    t = [target[d] - p0[d] for d in range(n)]
    gram = [
        [sum(basis[i][d] * basis[j][d] for d in range(n)) for j in range(k)]
        for i in range(k)
    ]
    rhs = [sum(basis[i][d] * t[d] for d in range(n)) for i in range(k)]
    sol = _solve_fraction_system(gram, rhs) if k else []
    if sol is None:
        return None
    for d in range(n):
        if sum(sol[i] * basis[i][d] for i in range(k)) != t[d]:
            return None
    lam0 = 1 - sum(sol, Fraction(0))
    coords = [lam0, *sol]
    return coords if all(c >= 0 for c in coords) else None


def _cmd_overlay(args):
    tri_a, _, _ = _load(args.mesh)
    tri_b, _, _ = _load(args.mesh2)
    mapped = _embed_refinement(tri_a, tri_b)
    if mapped is None:
        print(
            "error: meshes are not refinements of one common initial mesh",
            file=sys.stderr,
        )
        return EXIT_INVALID
    other = Triangulation(tri_a.forest, mapped)
    out = overlay_tris(tri_a, other)
    _save(args, out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bisectmesh",
        description="Conforming simplicial bisection refinement toolbox",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **flags):
        p = sub.add_parser(name)
        if flags.get("mesh", True):
            p.add_argument("--mesh", required=True)
        if flags.get("out", True):
            p.add_argument("--out")
        for extra in flags.get("extra", ()):
            extra(p)
        p.set_defaults(fn=fn)
        return p

    add("init-division", _cmd_init_division)
    add("agk-init", _cmd_agk_init)
    p = add("check", _cmd_check, out=False, extra=[
        lambda p: p.add_argument("what", choices=sorted(_CHECKS)),
        lambda p: p.add_argument("--depth", type=int, default=0),
    ])
    add("refine", _cmd_refine, extra=[
        lambda p: p.add_argument("--cell", type=int, required=True),
    ])
    add("uniform", lambda a: _cmd_sweep(a, uniform_refine))
    add("hyper-uniform", lambda a: _cmd_sweep_hyper(a), extra=[
        lambda p: p.add_argument("--depth", type=int, required=True),
    ])
    add("quasi-uniform", lambda a: _cmd_sweep(a, quasi_uniform_refine))
    add("constants", _cmd_constants, out=False, extra=[
        lambda p: p.add_argument("--depth", type=int, default=0),
    ])
    add("bdv-run", _cmd_bdv_run, extra=[
        lambda p: p.add_argument("--strategy", default="random-leaf"),
        lambda p: p.add_argument("--rounds", "-N", type=int, default=50),
        lambda p: p.add_argument("--seed", type=int, default=0),
        lambda p: p.add_argument("--mode", choices=["sic", "iso"]),
    ])
    add("pile-game", _cmd_pile_game, mesh=False, extra=[
        lambda p: p.add_argument("--strategy", default="random",
                                 choices=["tower", "quasitower", "random"]),
        lambda p: p.add_argument("--rounds", "-N", type=int, default=100),
        lambda p: p.add_argument("--seed", type=int, default=0),
    ])
    add("overlay", _cmd_overlay, extra=[
        lambda p: p.add_argument("--mesh2", required=True),
    ])

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if not exc.code else EXIT_INVALID
    try:
        return args.fn(args)
    except SystemExit as exc:
        return int(exc.code or 0)


def _cmd_sweep_hyper(args):
    return _cmd_sweep(args, hyperlevel_uniform_refine, j=args.depth)


if __name__ == "__main__":
    sys.exit(main())
