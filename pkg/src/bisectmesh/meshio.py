"""Mesh JSON round-trip.

Schema::

    {"dim": n,
     "vertices": [[["num","exp"], ...], ...],
     "cells": [{"horizontal": [...], "vertical": [...],
                "hyperlevel": h, "level": l?}, ...],
     "marking":   {"2": [[["num","exp"], ...], ...], ...}?,
     "partition": {"v0": [...], "v1": [...],
                   "order0": [...]?, "order1": [...]?}?}

Dyadics serialise as decimal-string pairs in canonical form (odd or zero
numerator); non-canonical encodings are rejected with the JSON path in the
message.
"""

from __future__ import annotations

import hashlib
import json
from typing import Optional

from .exactgeom import Dyadic, DyadicPoint
from .tarray import TaggedSimplex, VertexPool
from .forest import Triangulation
from .inittags import PointMarking, VertexPartition


class MeshFormatError(ValueError):
    pass


def _dyadic_to_json(d: Dyadic) -> list:
    return [str(d.num), str(d.exp)]


def _dyadic_from_json(obj, path: str) -> Dyadic:
    if (
        not isinstance(obj, list)
        or len(obj) != 2
        or not all(isinstance(x, str) for x in obj)
    ):
        raise MeshFormatError(f"{path}: expected a [\"num\",\"exp\"] string pair")
    try:
        num, exp = int(obj[0]), int(obj[1])
    except ValueError as exc:
        raise MeshFormatError(f"{path}: non-integer dyadic component") from exc
    if exp < 0:
        raise MeshFormatError(f"{path}: negative exponent")
    if num == 0 and exp != 0:
        raise MeshFormatError(f"{path}: zero must be encoded as [\"0\",\"0\"]")
    if num % 2 == 0 and num != 0 and exp != 0:
        raise MeshFormatError(f"{path}: non-canonical dyadic (even numerator)")
    return Dyadic(num, exp)


def _point_from_json(obj, dim: int, path: str) -> DyadicPoint:
    if not isinstance(obj, list) or len(obj) != dim:
        raise MeshFormatError(f"{path}: expected {dim} coordinates")
    return DyadicPoint(
        _dyadic_from_json(c, f"{path}[{i}]") for i, c in enumerate(obj)
    )


def mesh_to_dict(
    tri: Triangulation,
    marking: Optional[PointMarking] = None,
    partition: Optional[VertexPartition] = None,
) -> dict:
    pool = tri.forest.pool
    cells = tri.cells()
    used: list[int] = sorted({v for c in cells for v in c.vertex_ids})
    remap = {v: i for i, v in enumerate(used)}
    doc = {
        "dim": cells[0].dim,
        "vertices": [
            [_dyadic_to_json(c) for c in pool.point(v).coords] for v in used
        ],
        "cells": [
            {
                "horizontal": [remap[v] for v in c.horizontal],
                "vertical": [remap[v] for v in c.vertical],
                "hyperlevel": c.hyperlevel,
                "level": c.level,
            }
            for c in cells
        ],
    }
    if marking is not None:
        doc["marking"] = {
            str(m): [[_dyadic_to_json(c) for c in p.coords] for p in pts]
            for m, pts in marking.points_by_type.items()
        }
    if partition is not None:
        doc["partition"] = {
            "v0": sorted(remap[v] for v in partition.v0),
            "v1": sorted(remap[v] for v in partition.v1),
        }
        if partition.order0 is not None:
            doc["partition"]["order0"] = [remap[v] for v in partition.order0]
        if partition.order1 is not None:
            doc["partition"]["order1"] = [remap[v] for v in partition.order1]
    return doc


def mesh_from_dict(doc: dict):
    """Returns ``(triangulation, marking, partition)``; the latter two may be
    None."""
    if not isinstance(doc, dict):
        raise MeshFormatError("top level: expected an object")
    dim = doc.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise MeshFormatError("dim: expected a positive integer")
    vertices = doc.get("vertices")
    if not isinstance(vertices, list) or not vertices:
        raise MeshFormatError("vertices: expected a non-empty list")
    pool = VertexPool()
    ids = []
    for i, v in enumerate(vertices):
        p = _point_from_json(v, dim, f"vertices[{i}]")
        vid = pool.id_of(p)
        if vid != len(ids):
            raise MeshFormatError(f"vertices[{i}]: duplicate coordinates")
        ids.append(vid)
    raw_cells = doc.get("cells")
    if not isinstance(raw_cells, list) or not raw_cells:
        raise MeshFormatError("cells: expected a non-empty list")
    cells = []
    for i, c in enumerate(raw_cells):
        path = f"cells[{i}]"
        if not isinstance(c, dict):
            raise MeshFormatError(f"{path}: expected an object")
        hor = c.get("horizontal")
        ver = c.get("vertical", [])
        if not isinstance(hor, list) or not hor:
            raise MeshFormatError(f"{path}.horizontal: expected a non-empty list")
        if not isinstance(ver, list):
            raise MeshFormatError(f"{path}.vertical: expected a list")
        for field, lst in (("horizontal", hor), ("vertical", ver)):
            for v in lst:
                if not isinstance(v, int) or not 0 <= v < len(ids):
                    raise MeshFormatError(f"{path}.{field}: bad vertex id {v!r}")
        if len(hor) + len(ver) != dim + 1:
            raise MeshFormatError(f"{path}: need dim+1 = {dim + 1} vertices")
        if len(set(hor + ver)) != dim + 1:
            raise MeshFormatError(f"{path}: repeated vertex")
        level = c.get("level", 0)
        hyper = c.get("hyperlevel", 0)
        if not isinstance(level, int) or level < 0:
            raise MeshFormatError(f"{path}.level: expected a non-negative integer")
        if not isinstance(hyper, int) or hyper < 0:
            raise MeshFormatError(f"{path}.hyperlevel: expected a non-negative integer")
        cells.append(
            TaggedSimplex(tuple(hor), tuple(ver), level=level, hyperlevel=hyper)
        )
    tri = Triangulation.from_cells(pool, cells)
    marking = None
    if "marking" in doc:
        marking = PointMarking()
        if not isinstance(doc["marking"], dict):
            raise MeshFormatError("marking: expected an object")
        for key, pts in doc["marking"].items():
            try:
                m = int(key)
            except ValueError as exc:
                raise MeshFormatError(f"marking.{key}: non-integer type") from exc
            if not isinstance(pts, list):
                raise MeshFormatError(f"marking.{key}: expected a list of points")
            marking.points_by_type[m] = [
                _point_from_json(p, dim, f"marking.{key}[{i}]")
                for i, p in enumerate(pts)
            ]
    partition = None
    if "partition" in doc:
        part = doc["partition"]
        if not isinstance(part, dict):
            raise MeshFormatError("partition: expected an object")
        for key in ("v0", "v1"):
            if key not in part or not isinstance(part[key], list):
                raise MeshFormatError(f"partition.{key}: expected a list")
        partition = VertexPartition(
            v0=frozenset(part["v0"]),
            v1=frozenset(part["v1"]),
            order0=part.get("order0"),
            order1=part.get("order1"),
        )
    return tri, marking, partition


def write_mesh(path, tri: Triangulation, marking=None, partition=None):
    with open(path, "w") as fh:
        json.dump(mesh_to_dict(tri, marking, partition), fh, indent=1)
        fh.write("\n")


def read_mesh(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MeshFormatError(f"malformed JSON: {exc}") from exc
    return mesh_from_dict(doc)


def mesh_hash(tri: Triangulation) -> str:
    """Stable digest of the canonical mesh serialisation."""
    doc = mesh_to_dict(tri)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
