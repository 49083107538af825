"""Cone-candidate proximity graph (k-semi-Yao graph) and all-kNN reporting.

Connecting every point, within each cone of the family, to the k wedge members
with smallest axis projection yields a sparse supergraph of the k-nearest-
neighbor graph.  Sorting each point's incident edges by Euclidean length then
recovers its k nearest neighbors in order of increasing distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cone_geometry import ConeFamily
from .errors import InvalidInputError, InvalidParameterError
from .range_tree import build_range_tree, first_k


@dataclass
class ProximityGraph:
    """Undirected candidate graph with per-edge selection records.

    ``origins[(a, b)]`` (a < b) holds every (owner, cone) pair that selected
    the edge; ``candidates[p][l]`` is the ordered candidate list point p chose
    in cone l (ascending axis projection).
    """

    n: int
    k: int
    cone_count: int
    adjacency: dict[int, set[int]] = field(repr=False)
    origins: dict[tuple[int, int], set[tuple[int, int]]] = field(repr=False)
    candidates: dict[int, tuple[tuple[int, ...], ...]] = field(repr=False)

    @property
    def edge_count(self) -> int:
        return len(self.origins)

    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.origins)

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.origins


def _normalize_points(points):
    """Accept an (n, d) array or (id, position) pairs with contiguous ids."""
    if isinstance(points, np.ndarray):
        return np.asarray(points, dtype=float)
    pts = sorted(((int(pid), np.asarray(p, dtype=float)) for pid, p in points), key=lambda t: t[0])
    ids = [pid for pid, _ in pts]
    if ids != list(range(len(ids))):
        raise InvalidInputError("point ids must be contiguous integers starting at 0")
    return np.array([p for _, p in pts])


def graph_from_candidates(candidates: dict[int, tuple[tuple[int, ...], ...]],
                          n: int, k: int, cone_count: int) -> ProximityGraph:
    """Assemble the undirected graph from per-point per-cone candidate lists."""
    adjacency: dict[int, set[int]] = {p: set() for p in range(n)}
    origins: dict[tuple[int, int], set[tuple[int, int]]] = {}
    for p in range(n):
        for l, targets in enumerate(candidates[p]):
            for q in targets:
                key = (p, q) if p < q else (q, p)
                origins.setdefault(key, set()).add((p, l))
                adjacency[p].add(q)
                adjacency[q].add(p)
    graph = ProximityGraph(
        n=n, k=k, cone_count=cone_count,
        adjacency=adjacency, origins=origins, candidates=candidates,
    )
    assert graph.edge_count <= cone_count * k * n, "edge bound c*k*n violated"
    return graph


def build_ksyg(points, k: int, family: ConeFamily, trees=None) -> ProximityGraph:
    """Build the candidate graph via per-cone range-tree queries.

    For each point p and each cone l, queries the first k+1 wedge members by
    axis order, drops p itself, and keeps at most k targets.  Prebuilt trees
    (one per cone, in cone order) may be supplied to amortize construction.
    """
    positions = _normalize_points(points)
    n = len(positions)
    if n < 2:
        raise InvalidInputError("need at least two points")
    if not 1 <= k <= n - 1:
        raise InvalidParameterError(f"k must be in [1, n-1], got k={k}, n={n}")
    if trees is None:
        indexed = list(enumerate(positions))
        trees = [build_range_tree(indexed, family, l) for l in range(family.cone_count)]
    candidates: dict[int, list[tuple[int, ...]]] = {p: [] for p in range(n)}
    for l, tree in enumerate(trees):
        u_all = family.u_coords_many(l, positions)
        for p in range(n):
            got = first_k(tree, positions[p], k + 1, u_apex=u_all[p]).point_ids
            chosen = tuple(q for q in got if q != p)[:k]
            candidates[p].append(chosen)
    finished = {p: tuple(rows) for p, rows in candidates.items()}
    return graph_from_candidates(finished, n, k, family.cone_count)


@dataclass(frozen=True)
class KnnTable:
    """Per-point ordered nearest neighbors: rows of (neighbor_id, distance).

    Row p holds min(k, n-1) neighbors ascending by distance with point-id
    tie-breaks.  Squared distances are kept alongside so comparisons against
    the k-th neighbor distance never round-trip through a square root.
    """

    k: int
    rows: tuple[tuple[tuple[int, float], ...], ...]
    rows_sq: tuple[tuple[float, ...], ...] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.rows)

    def neighbor_ids(self, p: int) -> tuple[int, ...]:
        return tuple(nid for nid, _ in self.rows[p])

    def kth_distance(self, p: int) -> float:
        return self.rows[p][-1][1]

    def kth_sq(self, p: int) -> float:
        return self.rows_sq[p][-1]


def all_knn(graph: ProximityGraph, positions, k: int) -> KnnTable:
    """k nearest neighbors of every point, read off the candidate graph.

    Sorts each point's incident edges by (squared length, neighbor id) and
    truncates.  Correct whenever the graph contains the k-NN graph, which
    :func:`build_ksyg` guarantees.
    """
    positions = np.asarray(positions, dtype=float)
    if graph.n != len(positions):
        raise InvalidInputError("graph and positions disagree on point count")
    if graph.k != k:
        raise InvalidInputError(f"graph was built for k={graph.k}, queried with k={k}")
    rows = []
    rows_sq = []
    for p in range(graph.n):
        nbrs = sorted(graph.adjacency[p])
        if not nbrs:
            rows.append(())
            rows_sq.append(())
            continue
        d2 = np.sum((positions[nbrs] - positions[p]) ** 2, axis=1)
        order = sorted(range(len(nbrs)), key=lambda i: (d2[i], nbrs[i]))[: min(k, graph.n - 1)]
        rows.append(tuple((nbrs[i], float(np.sqrt(d2[i]))) for i in order))
        rows_sq.append(tuple(float(d2[i]) for i in order))
    return KnnTable(k=k, rows=tuple(rows), rows_sq=tuple(rows_sq))


def knng_subgraph_check(graph: ProximityGraph, positions, k: int) -> bool:
    """True iff every brute-force k-NN edge is present in the graph.

    Used as a test oracle and by the CLI ``validate`` command; the k-NN side
    is recomputed definitionally here, independent of the tree pipeline.
    """
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    for p in range(n):
        d2 = np.sum((positions - positions[p]) ** 2, axis=1)
        others = [q for q in range(n) if q != p]
        others.sort(key=lambda q: (d2[q], q))
        for q in others[: min(k, n - 1)]:
            if not graph.has_edge(p, q):
                return False
    return True
