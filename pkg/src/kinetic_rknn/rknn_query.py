"""Reverse k-nearest-neighbor queries, static and kinetic.

A point p is a reverse k-nearest neighbor of a query q when q is at least as
close to p as p's own k-th nearest neighbor (boundary equality included).
Candidates come from the per-cone first-k wedge queries, so at most
cone_count * k points are ever examined; each candidate is then accepted or
rejected with one squared-distance comparison against its k-th neighbor
distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .ksyg_knn import KnnTable
from .range_tree import AugmentedRangeTree, first_k


@dataclass(frozen=True)
class RknnAnswer:
    """Result of one reverse-kNN query at one instant.

    ``coincident`` flags a query that landed exactly on a data point; the
    answer is still computed (the coincident point reports distance zero and
    is always a member) but callers may want to know the query was degenerate.
    """

    query: np.ndarray
    time: float
    members: tuple[int, ...]
    candidates_examined: int
    coincident: bool = False


def rknn_static(
    points,
    knn_table: KnnTable,
    trees: list[AugmentedRangeTree],
    q,
    k: int,
    time: float = 0.0,
) -> RknnAnswer:
    """Answer a reverse-kNN query against prebuilt static structures.

    ``trees`` holds one augmented range tree per cone (in cone order) built
    over ``points``; ``knn_table`` must come from the same positions with the
    same k.  Comparisons use squared distances; candidates with
    |pq|^2 == |p p_k|^2 are members.
    """
    positions = np.asarray(points, dtype=float)
    q = np.asarray(q, dtype=float)
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if knn_table.k != k or knn_table.n != len(positions):
        raise InvalidParameterError("knn table does not match positions/k")
    candidate_ids: set[int] = set()
    for tree in trees:
        candidate_ids.update(first_k(tree, q, k).point_ids)
    cone_count = trees[0].family.cone_count if trees else 0
    assert len(candidate_ids) <= cone_count * k, "candidate bound c*k violated"
    members = []
    coincident = False
    for p in sorted(candidate_ids):
        d2 = float(np.sum((positions[p] - q) ** 2))
        if d2 == 0.0:
            coincident = True
        if d2 <= knn_table.kth_sq(p):
            members.append(p)
    answer = RknnAnswer(
        query=q,
        time=time,
        members=tuple(members),
        candidates_examined=len(candidate_ids),
        coincident=coincident,
    )
    assert len(answer.members) <= cone_count * k
    return answer


def rknn_kinetic(state, q, k: int, t: float) -> RknnAnswer:
    """Answer a reverse-kNN query on a kinetic state at time t.

    Advances the state to t first (processing any events scheduled at or
    before t), then generates candidates from the kinetic structures and
    filters them against the maintained k-th neighbor distances.  The state
    cannot rewind: t earlier than the state's current time raises
    :class:`~kinetic_rknn.errors.TimeTravelError`.
    """
    if k != state.k:
        raise InvalidParameterError(
            f"kinetic state maintains k={state.k}; cannot answer k={k}"
        )
    return state.rknn_query(np.asarray(q, dtype=float), t)
