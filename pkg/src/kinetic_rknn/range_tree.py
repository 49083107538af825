"""Static multi-level range trees over cone coordinates.

One tree serves one cone of a :class:`~kinetic_rknn.cone_geometry.ConeFamily`.
Levels 1..d are nested balanced binary search layers keyed by the cone's
u-coordinates (with point-id tie-breaks); the final u-level additionally keeps
every dyadic run of its order pre-merged by ascending axis projection.  A
wedge query "first k points of P inside the cone translated to an apex, by
axis order" decomposes the wedge (a dominance range in u-coordinates) into
canonical axis-sorted runs and k-way-merges their heads.

Construction threads one presorted order per remaining level through the
recursion and splits by stable filtering; the final level merges axis runs
bottom-up.  No comparison sort runs inside a node, and rebuilding from the
same point set is deterministic regardless of input order.

Trees are immutable after construction; concurrent queries are safe.  The
kinetic variant that supports motion lives in :mod:`kinetic_rknn.kinetic_engine`.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .cone_geometry import ConeFamily
from .errors import InvalidInputError, InvalidParameterError


class _Node:
    """Inner-level node: a contiguous slice of one sorted order."""

    __slots__ = ("min_key", "max_key", "left", "right", "assoc", "size")

    def __init__(self):
        self.min_key = None
        self.max_key = None
        self.left = None
        self.right = None
        self.assoc = None   # next-level _Node tree, or _LastLevel at the end
        self.size = 0


class _LastLevel:
    """Final u-level: sorted keys plus pre-merged axis runs per dyadic block.

    ``levels[h][i]`` holds the points of key positions
    [i * 2^h, min((i+1) * 2^h, m)) sorted by (axis coordinate, id); a suffix
    of the key order decomposes into O(log m) such blocks by the standard
    bottom-up index walk.
    """

    __slots__ = ("keys", "xentries", "levels")

    def __init__(self, keys: list[tuple], xentries: list[tuple]):
        self.keys = keys
        self.xentries = xentries  # level-0 runs are singletons, kept implicit
        current = xentries
        singles = True
        self.levels = []
        while len(current) > 1:
            merged = []
            if singles:
                for i in range(0, len(current) - 1, 2):
                    a, b = current[i], current[i + 1]
                    merged.append([a, b] if a <= b else [b, a])
                if len(current) & 1:
                    merged.append([current[-1]])
            else:
                for i in range(0, len(current) - 1, 2):
                    merged.append(sorted(current[i] + current[i + 1]))
                if len(current) & 1:
                    merged.append(current[-1])
            self.levels.append(merged)
            current = merged
            singles = False

    def suffix_blocks(self, threshold: tuple) -> list[list[tuple]]:
        """Axis-sorted runs covering all keys >= threshold, disjointly."""
        lo = bisect_left(self.keys, threshold)
        hi = len(self.keys)
        out = []
        h = -1  # level -1 is the implicit singleton layer
        while lo < hi:
            if lo & 1:
                out.append([self.xentries[lo]] if h < 0 else self.levels[h][lo])
                lo += 1
            if hi & 1:
                hi -= 1
                out.append([self.xentries[hi]] if h < 0 else self.levels[h][hi])
            lo >>= 1
            hi >>= 1
            h += 1
        return out


class CanonicalRun:
    """Handle for one canonical piece of a wedge decomposition."""

    __slots__ = ("xlist",)

    def __init__(self, xlist):
        self.xlist = xlist

    @property
    def point_ids(self) -> tuple[int, ...]:
        return tuple(pid for _, pid in self.xlist)


@dataclass(frozen=True)
class CandidateSet:
    """First-k result of a wedge query: ids ascending by axis projection."""

    point_ids: tuple[int, ...]
    axis_coords: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.point_ids)


@dataclass(frozen=True)
class AugmentedRangeTree:
    family: ConeFamily
    cone_index: int
    ids: tuple[int, ...]
    root: _Node | _LastLevel | None = field(repr=False)
    _u: np.ndarray = field(repr=False)      # (n, d) u-coordinates, row-indexed
    _x: np.ndarray = field(repr=False)      # (n,) axis projections

    @property
    def size(self) -> int:
        return len(self.ids)

    def iter_axis_runs(self):
        """Yield every stored axis-sorted run as a :class:`CanonicalRun`."""
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            if isinstance(node, _LastLevel):
                for level in node.levels:
                    for block in level:
                        yield CanonicalRun(block)
                continue
            for child in (node.left, node.right, node.assoc):
                if child is not None:
                    stack.append(child)

    def storage_stats(self) -> dict[str, int]:
        """Node and axis-run entry counts, used by space sanity checks."""
        nodes = 0
        list_entries = 0
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            nodes += 1
            if isinstance(node, _LastLevel):
                list_entries += sum(len(b) for lvl in node.levels for b in lvl)
                continue
            for child in (node.left, node.right, node.assoc):
                if child is not None:
                    stack.append(child)
        return {"nodes": nodes, "list_entries": list_entries}


def build_range_tree(points, family: ConeFamily, cone_index: int) -> AugmentedRangeTree:
    """Build the augmented tree for one cone from (point_id, position) pairs.

    Every level sorts by (coordinate, point_id), so the input order is
    immaterial.  Duplicate point ids are rejected.
    """
    pts = list(points)
    ids = [int(pid) for pid, _ in pts]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("duplicate point_id in range tree input")
    if not pts:
        return AugmentedRangeTree(
            family=family, cone_index=cone_index, ids=(), root=None,
            _u=np.empty((0, family.dimension)), _x=np.empty(0),
        )
    positions = np.array([np.asarray(p, dtype=float) for _, p in pts])
    if not np.all(np.isfinite(positions)):
        raise InvalidInputError("non-finite position in range tree input")
    u = family.u_coords_many(cone_index, positions)
    x = family.axis_coords_many(cone_index, positions)
    d = family.dimension
    n = len(pts)
    id_arr = np.array(ids)
    ulist = u.tolist()
    xvals = [float(v) for v in x]
    # one key tuple per (row, level), shared by reference everywhere below
    key_rows = [[(ulist[r][j], ids[r]) for r in range(n)] for j in range(d)]
    xkeys = [(xvals[r], ids[r]) for r in range(n)]
    level_orders = [list(np.lexsort((id_arr, u[:, j]))) for j in range(d)]
    stamp = [0] * n
    version = 0
    last = d - 1
    last_keys = key_rows[last]

    def build(orders: list[list[int]], level: int):
        nonlocal version
        rows = orders[0]
        if level == last:
            return _LastLevel([last_keys[r] for r in rows], [xkeys[r] for r in rows])
        keys = key_rows[level]
        node = _Node()
        node.size = len(rows)
        node.min_key = keys[rows[0]]
        node.max_key = keys[rows[-1]]
        if len(rows) > 1:
            mid = len(rows) // 2
            version += 1
            v = version
            for r in rows[:mid]:
                stamp[r] = v
            left_orders = [[r for r in o if stamp[r] == v] for o in orders]
            right_orders = [[r for r in o if stamp[r] != v] for o in orders]
            node.left = build(left_orders, level)
            node.right = build(right_orders, level)
        node.assoc = build(orders[1:], level + 1)
        return node

    root = build(level_orders, 0)
    return AugmentedRangeTree(
        family=family, cone_index=cone_index, ids=tuple(ids), root=root, _u=u, _x=x,
    )


def canonical_nodes(tree: AugmentedRangeTree, apex, u_apex=None) -> list[CanonicalRun]:
    """Decompose P inside the wedge at ``apex`` into disjoint axis-sorted runs.

    Membership is the closed dominance test u_j(point) >= u_j(apex) for every
    facet coordinate, matching the brute-force scans used as oracles.
    ``u_apex`` may carry precomputed apex facet coordinates.
    """
    if tree.root is None:
        return []
    if u_apex is None:
        apex = np.asarray(apex, dtype=float)
        u_apex = tree.family.u_coords_many(tree.cone_index, apex[None, :])[0]
    # A 1-tuple threshold compares below every (value, id) key with the same
    # value, which realizes the value-closed boundary rule.
    thresholds = [(float(v),) for v in u_apex]
    d = tree.family.dimension
    out: list[CanonicalRun] = []

    def collect(node, level: int):
        if isinstance(node, _LastLevel):
            out.extend(CanonicalRun(b) for b in node.suffix_blocks(thresholds[level]))
            return
        threshold = thresholds[level]
        if node.max_key < threshold:
            return
        if node.min_key >= threshold:
            collect(node.assoc, level + 1)
            return
        if node.left is None:
            return
        collect(node.left, level)
        collect(node.right, level)

    collect(tree.root, 0)
    return out


def first_k(tree: AugmentedRangeTree, apex, k: int, u_apex=None) -> CandidateSet:
    """First k points of the wedge at ``apex`` in ascending axis order.

    Equivalent to sorting the wedge members by (axis coordinate, point id)
    and truncating to k, but runs off the canonical decomposition with a
    k-way heap merge of run heads.
    """
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    runs = canonical_nodes(tree, apex, u_apex=u_apex)
    heap = []
    for idx, run in enumerate(runs):
        xval, pid = run.xlist[0]
        heap.append((xval, pid, idx, 0))
    heapq.heapify(heap)
    ids: list[int] = []
    xs: list[float] = []
    while heap and len(ids) < k:
        xval, pid, idx, pos = heapq.heappop(heap)
        ids.append(pid)
        xs.append(xval)
        nxt = pos + 1
        xlist = runs[idx].xlist
        if nxt < len(xlist):
            nx, npid = xlist[nxt]
            heapq.heappush(heap, (nx, npid, idx, nxt))
    return CandidateSet(point_ids=tuple(ids), axis_coords=tuple(xs))
