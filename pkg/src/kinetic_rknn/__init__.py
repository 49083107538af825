"""Reverse k-nearest-neighbor queries on moving points.

The package maintains, over time, a cone-based candidate graph (the k-semi-Yao
graph) of a set of points with polynomial trajectories, derives all k-nearest
neighbors from it, and answers reverse k-nearest-neighbor queries at any
simulation time.  A static pipeline (cone partition, augmented range trees,
graph construction, all-kNN reporting) handles fixed point sets; a kinetic
engine processes certificate-failure events to keep every structure valid
while the points move.
"""

from .cone_geometry import Cone, ConeFamily, build_cone_family
from .errors import (
    DegenerateInputError,
    InvalidInputError,
    InvalidParameterError,
    KineticRknnError,
    ParseError,
    TimeTravelError,
)
from .trajectories import Root, RootList, Trajectory, positions_at, swap_times
from .range_tree import AugmentedRangeTree, CandidateSet, build_range_tree, canonical_nodes, first_k
from .ksyg_knn import KnnTable, ProximityGraph, all_knn, build_ksyg, knng_subgraph_check
from .oracle import brute_knn, brute_ksyg, brute_rknn
from .rknn_query import RknnAnswer, rknn_kinetic, rknn_static
from .kinetic_engine import KineticState, advance, initialize

__all__ = [
    "Cone",
    "ConeFamily",
    "build_cone_family",
    "Trajectory",
    "Root",
    "RootList",
    "positions_at",
    "swap_times",
    "AugmentedRangeTree",
    "CandidateSet",
    "build_range_tree",
    "canonical_nodes",
    "first_k",
    "ProximityGraph",
    "KnnTable",
    "build_ksyg",
    "all_knn",
    "knng_subgraph_check",
    "brute_knn",
    "brute_ksyg",
    "brute_rknn",
    "RknnAnswer",
    "rknn_static",
    "rknn_kinetic",
    "KineticState",
    "initialize",
    "advance",
    "KineticRknnError",
    "InvalidParameterError",
    "InvalidInputError",
    "DegenerateInputError",
    "TimeTravelError",
    "ParseError",
]
