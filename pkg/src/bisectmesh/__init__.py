"""Conforming n-dimensional simplicial bisection refinement.

Exact dyadic geometry, tagged-simplex bisection, binary forests with
overlay/underlay, conformity-preserving refinement, tagging initialisers
with their initial-condition verifiers, the 1D pile-game toy model, and a
harness that computes and checks the closure-estimate constants.
"""

from .exactgeom import Dyadic, DyadicPoint, midpoint, point, simplex_volume
from .tarray import Edge, TaggedSimplex, VertexPool, bisect, kuhn, refinement_edge
from .forest import Forest, Triangulation, overlay, underlay, tower
from .refine import RefinementError, check_conforming, refine, uniform_refine
from .inittags import agk_init, initial_division, PointMarking, VertexPartition
from .harness import Constants, compute_constants, run_sequence, verify_bdv

__all__ = [
    "Dyadic",
    "DyadicPoint",
    "midpoint",
    "point",
    "simplex_volume",
    "Edge",
    "TaggedSimplex",
    "VertexPool",
    "bisect",
    "kuhn",
    "refinement_edge",
    "Forest",
    "Triangulation",
    "overlay",
    "underlay",
    "tower",
    "RefinementError",
    "check_conforming",
    "refine",
    "uniform_refine",
    "agk_init",
    "initial_division",
    "PointMarking",
    "VertexPartition",
    "Constants",
    "compute_constants",
    "run_sequence",
    "verify_bdv",
]

__version__ = "0.1.0"
