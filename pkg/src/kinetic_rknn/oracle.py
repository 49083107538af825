"""Brute-force reference implementations of every queryable quantity.

These run straight off the definitions (all-pairs distances, linear wedge
scans) and deliberately share no tree/graph code with the main pipeline; the
only common ground is the cone projection primitives, so that geometric
boundary rules agree bit for bit.  Tests and the CLI ``validate`` command
compare pipeline output against these.  They are quadratic and intended for
desk-scale inputs only.
"""

from __future__ import annotations

import numpy as np

from .cone_geometry import ConeFamily
from .errors import InvalidParameterError
from .ksyg_knn import KnnTable, ProximityGraph, graph_from_candidates
from .rknn_query import RknnAnswer


def brute_knn(positions, k: int) -> KnnTable:
    """All k-nearest neighbors from all-pairs distances and a per-row sort."""
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    if not 1 <= k <= n - 1:
        raise InvalidParameterError(f"k must be in [1, n-1], got k={k}, n={n}")
    rows = []
    rows_sq = []
    for p in range(n):
        d2 = np.sum((positions - positions[p]) ** 2, axis=1)
        order = sorted((q for q in range(n) if q != p), key=lambda q: (d2[q], q))[:k]
        rows.append(tuple((q, float(np.sqrt(d2[q]))) for q in order))
        rows_sq.append(tuple(float(d2[q]) for q in order))
    return KnnTable(k=k, rows=tuple(rows), rows_sq=tuple(rows_sq))


def brute_ksyg(positions, k: int, family: ConeFamily) -> ProximityGraph:
    """Candidate graph by definition: per point, per cone, scan-sort-take-k."""
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    candidates: dict[int, tuple[tuple[int, ...], ...]] = {}
    per_cone = []
    for l in range(family.cone_count):
        u = family.u_coords_many(l, positions)
        x = family.axis_coords_many(l, positions)
        per_cone.append((u, x))
    for p in range(n):
        rows = []
        for l in range(family.cone_count):
            u, x = per_cone[l]
            inside = np.all(u >= u[p], axis=1)
            members = [q for q in range(n) if q != p and inside[q]]
            members.sort(key=lambda q: (x[q], q))
            rows.append(tuple(members[:k]))
        candidates[p] = tuple(rows)
    return graph_from_candidates(candidates, n, k, family.cone_count)


def brute_rknn(positions, q, k: int) -> RknnAnswer:
    """Reverse k-nearest neighbors straight from the definition.

    Computes each point's k-th neighbor distance from all-pairs distances and
    keeps the points whose k-th neighbor is at least as far as the query.
    ``candidates_examined`` reports the full scan size n.
    """
    positions = np.asarray(positions, dtype=float)
    q = np.asarray(q, dtype=float)
    n = len(positions)
    if not 1 <= k <= n - 1:
        raise InvalidParameterError(f"k must be in [1, n-1], got k={k}, n={n}")
    d2q = np.sum((positions - q) ** 2, axis=1)
    members = []
    coincident = False
    for p in range(n):
        d2 = np.sum((positions - positions[p]) ** 2, axis=1)
        kth_sq = sorted((float(d2[j]), j) for j in range(n) if j != p)[k - 1][0]
        if d2q[p] <= kth_sq:
            members.append(p)
        if d2q[p] == 0.0:
            coincident = True
    return RknnAnswer(
        query=q,
        time=0.0,
        members=tuple(members),
        candidates_examined=n,
        coincident=coincident,
    )
