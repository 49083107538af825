"""Event-driven maintenance of the candidate graph and all k-nearest neighbors.

The engine keeps, per cone, a rank-based multi-level decomposition of the
point set.  Ranks live in fixed implicit binary trees over rank slots, so the
tree shapes never change while points move; a certificate failure (two points
exchanging order along some projection) swaps two adjacent rank slots and
repairs bookkeeping along the affected root paths only.

Shared kinetic sorted lists.  Many cones project onto the same line: for the
six-wedge plane family all facet normals and axes land on just three distinct
lines, so the engine keeps one kinetic sorted list per distinct direction and
maps each cone's coordinates onto (line, sign) roles.  One certificate failure
on a line is handled as a u-swap for every cone using that line as a facet
coordinate and as an x-swap for every cone using it as the axis.

Pair decomposition.  For each cone ``l`` and each chain of internal nodes
(one per u-level) the engine lazily materializes a pair record: the sorted
axis slots of the points ranking right of the chain at every level (the
target side), and a reverse map from "current k-th wedge point" to the
apex-side points that see it (the searchable companion list).  Candidate
queries stream the target sides of the chains along the query point's own
rank paths, which is exactly the canonical-node decomposition of the wedge.

A KineticState is single-threaded: all event processing and queries against
it must happen on one logical thread.  Distinct states are independent.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass
from itertools import product

import numpy as np

from .cone_geometry import ConeFamily
from .errors import InvalidInputError, InvalidParameterError, TimeTravelError
from .ksyg_knn import KnnTable, ProximityGraph, graph_from_candidates
from .rknn_query import RknnAnswer
from .trajectories import (
    Trajectory,
    order_flip_transitions,
    poly_sub,
    projected_difference,
    squared_distance_poly,
)


@dataclass(frozen=True)
class Role:
    kind: str          # "u" or "x"
    cone: int
    level: int         # u-level index (0-based); -1 for the axis role
    sigma: int         # +1: cone order equals line order; -1: reversed


@dataclass(frozen=True)
class Line:
    index: int
    direction: np.ndarray
    roles: tuple[Role, ...]


@dataclass(frozen=True)
class SwapEvent:
    time: float
    line_index: int
    a: int             # immediately before b on the line when the event fired
    b: int


@dataclass(frozen=True)
class EventReport:
    """One processed event: the pair swapped and the undirected edge delta."""

    time: float
    kind: str          # "swap" (projection order) or "knn" (edge-length order)
    line_index: int    # owning point id for knn events
    a: int
    b: int
    edges_added: tuple[tuple[int, int], ...]
    edges_removed: tuple[tuple[int, int], ...]


@dataclass
class Stats:
    events: int = 0                # projection-swap certificate failures
    u_role_updates: int = 0
    x_role_updates: int = 0
    knn_swaps: int = 0
    chi_k: int = 0                 # directed candidate-slot changes
    touched_total: int = 0
    touched_max: int = 0

    @property
    def touched_mean(self) -> float:
        processed = self.events + self.knn_swaps
        return self.touched_total / processed if processed else 0.0


class _PairRec:
    """Lazily materialized pair: target-side axis slots and apex-side map."""

    __slots__ = ("xr", "bprime", "bcount")

    def __init__(self):
        self.xr: list[int] = []
        self.bprime: dict[int | None, set[int]] = {}
        self.bcount = 0


def _internal_path(rank: int, n: int) -> list[tuple[int, int, int]]:
    """Internal nodes (lo, hi, mid) of the implicit slot tree containing rank."""
    out = []
    lo, hi = 0, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        out.append((lo, hi, mid))
        if rank < mid:
            hi = mid
        else:
            lo = mid
    return out


def _log_cost(length: int) -> int:
    return int(math.log2(length + 2)) + 1


class KineticState:
    """All kinetic structures for one point set, one k, one cone family."""

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    def __init__(self, trajectories, k: int, family: ConeFamily, t0: float = 0.0):
        trajs = sorted(trajectories, key=lambda tr: tr.point_id)
        n = len(trajs)
        if n < 2:
            raise InvalidInputError("need at least two trajectories")
        if [tr.point_id for tr in trajs] != list(range(n)):
            raise InvalidInputError("point ids must be contiguous integers from 0")
        if not 1 <= k <= n - 1:
            raise InvalidParameterError(f"k must be in [1, n-1], got k={k}, n={n}")
        if any(tr.dimension != family.dimension for tr in trajs):
            raise InvalidInputError("trajectory dimension does not match cone family")
        self.trajectories: tuple[Trajectory, ...] = tuple(trajs)
        self.k = k
        self.family = family
        self.n = n
        self.d = family.dimension
        self.s_max = max(tr.degree for tr in trajs)
        self.time = float(t0)
        self.stats = Stats()
        self._pos_cache: dict[int, np.ndarray] = {}
        self._pending_edges: list[tuple[str, int, int]] = []
        # Certificate polynomials are fixed per pair, so their order-flip
        # times are computed once (both directions at once, the reversed pair
        # has the negated polynomial) and rescheduling is a binary search.
        self._line_flips: dict[tuple[int, int, int], tuple[tuple, tuple]] = {}
        self._knn_flips: dict[tuple[int, int, int], tuple[tuple, tuple]] = {}

        self._build_lines()
        self._order: list[list[int]] = []
        self._pos: list[list[int]] = []
        for line in self.lines:
            order = self._initial_order(line)
            pos = [0] * n
            for idx, pid in enumerate(order):
                pos[pid] = idx
            self._order.append(order)
            self._pos.append(pos)

        c = family.cone_count
        self.pairs: dict[tuple, _PairRec] = {}
        for pid in range(n):
            for l in range(c):
                slot = self._x_slot(l, pid)
                for key in self._chains(l, pid, "R"):
                    insort(self._pair(key).xr, slot)

        self.cand: list[list[list[int]]] = [
            [self._kinetic_first_k(l, pid, self.k) for l in range(c)]
            for pid in range(n)
        ]
        self.revc: list[dict[int, set[int]]] = [dict() for _ in range(c)]
        self.edge_origins: dict[tuple[int, int], set[tuple[int, int]]] = {}
        for pid in range(n):
            for l in range(c):
                for tgt in self.cand[pid][l]:
                    self._origin_add(pid, l, tgt)
        self._pending_edges.clear()

        for pid in range(n):
            for l in range(c):
                tgt = self._kth_of(pid, l)
                for key in self._chains(l, pid, "B"):
                    pr = self._pair(key)
                    pr.bprime.setdefault(tgt, set()).add(pid)
                    pr.bcount += 1

        self.knn_order: list[list[int]] = []
        for pid in range(n):
            nbrs = sorted(self._neighbors(pid))
            nbrs.sort(key=lambda q: (self._d2(pid, q), q))
            self.knn_order.append(nbrs)

        self._heap: list[tuple] = []
        self._registry: dict[tuple, float] = {}
        for li in range(len(self.lines)):
            for ia in range(n - 1):
                self._schedule_line_cert(li, ia)
        for pid in range(n):
            for i in range(len(self.knn_order[pid]) - 1):
                self._schedule_knn_cert(pid, i)
        self.stats = Stats()  # construction work does not count as event cost

    def _build_lines(self):
        registry: dict[tuple, int] = {}
        directions: list[np.ndarray] = []
        role_lists: list[list[Role]] = []

        def register(vec: np.ndarray) -> tuple[int, int]:
            lead = 0
            while abs(vec[lead]) <= 1e-9:
                lead += 1
            sign = 1 if vec[lead] > 0 else -1
            canon = vec * float(sign)
            key = tuple(round(float(v), 9) for v in canon)
            if key not in registry:
                registry[key] = len(directions)
                directions.append(canon.copy())
                role_lists.append([])
            return registry[key], sign

        self._u_role_of: list[list[tuple[int, int]]] = []
        self._x_role_of: list[tuple[int, int]] = []
        for l in range(self.family.cone_count):
            cone = self.family.cones[l]
            per_level = []
            for j in range(self.d):
                li, sigma = register(cone.facet_normals[j])
                role_lists[li].append(Role(kind="u", cone=l, level=j, sigma=sigma))
                per_level.append((li, sigma))
            self._u_role_of.append(per_level)
            li, sigma = register(cone.axis)
            role_lists[li].append(Role(kind="x", cone=l, level=-1, sigma=sigma))
            self._x_role_of.append((li, sigma))
        self.lines = [
            Line(index=i, direction=directions[i],
                 roles=tuple(sorted(role_lists[i], key=lambda r: (r.kind, r.cone, r.level))))
            for i in range(len(directions))
        ]

    def _initial_order(self, line: Line) -> list[int]:
        vals = [float(self._position(pid) @ line.direction) for pid in range(self.n)]
        order = sorted(range(self.n), key=lambda pid: (vals[pid], pid))
        # Exact projection ties must start in the order they will hold just
        # after t0, otherwise the first certificates would fire immediately.
        i = 0
        while i < len(order) - 1:
            j = i
            while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
                j += 1
            if j > i:
                run = sorted(order[i : j + 1], key=_future_key(self, line.direction))
                order[i : j + 1] = run
            i = j + 1
        return order

    # ------------------------------------------------------------------
    # primitive accessors
    # ------------------------------------------------------------------

    def _touch(self, count: int = 1):
        self.stats.touched_total += count

    def _position(self, pid: int) -> np.ndarray:
        p = self._pos_cache.get(pid)
        if p is None:
            p = self.trajectories[pid].position(self.time)
            self._pos_cache[pid] = p
        return p

    def current_positions(self) -> np.ndarray:
        return np.array([self._position(pid) for pid in range(self.n)])

    def _d2(self, a: int, b: int) -> float:
        return float(np.sum((self._position(a) - self._position(b)) ** 2))

    def _u_rank(self, l: int, j: int, pid: int) -> int:
        li, sigma = self._u_role_of[l][j]
        p = self._pos[li][pid]
        return p if sigma > 0 else self.n - 1 - p

    def _x_slot(self, l: int, pid: int) -> int:
        li, sigma = self._x_role_of[l]
        p = self._pos[li][pid]
        return p if sigma > 0 else self.n - 1 - p

    def _point_at_x_slot(self, l: int, slot: int) -> int:
        li, sigma = self._x_role_of[l]
        idx = slot if sigma > 0 else self.n - 1 - slot
        return self._order[li][idx]

    def _point_at_u_rank(self, l: int, j: int, rank: int) -> int:
        li, sigma = self._u_role_of[l][j]
        idx = rank if sigma > 0 else self.n - 1 - rank
        return self._order[li][idx]

    def _kth_of(self, pid: int, l: int) -> int | None:
        row = self.cand[pid][l]
        return row[self.k - 1] if len(row) == self.k else None

    def _rank_dominates(self, l: int, q: int, w: int) -> bool:
        """q strictly above w in every u-rank of cone l (q inside w's wedge)."""
        for j in range(self.d):
            if self._u_rank(l, j, q) <= self._u_rank(l, j, w):
                return False
        return True

    # ------------------------------------------------------------------
    # pair chains
    # ------------------------------------------------------------------

    def _pair(self, key: tuple) -> _PairRec:
        pr = self.pairs.get(key)
        if pr is None:
            pr = _PairRec()
            self.pairs[key] = pr
        return pr

    def _chains(self, l: int, pid: int, side: str, override=None) -> list[tuple]:
        """Pair keys whose apex side (B) or target side (R) contains pid.

        ``override`` maps (level, pid) to a rank to use instead of the live
        one, for enumerating memberships as they were before a swap.
        """
        per_level = []
        want_left = side == "B"
        for j in range(self.d):
            rank = self._u_rank(l, j, pid)
            if override is not None and (j, pid) in override:
                rank = override[(j, pid)]
            nodes = []
            for lo, hi, mid in _internal_path(rank, self.n):
                if (rank < mid) == want_left:
                    nodes.append((lo, hi))
            if not nodes:
                return []
            per_level.append(nodes)
        self._touch(sum(len(p) for p in per_level))
        return [(l, *combo) for combo in product(*per_level)]

    def _xr_remove(self, pr: _PairRec, slot: int):
        idx = bisect_left(pr.xr, slot)
        del pr.xr[idx]
        self._touch(_log_cost(len(pr.xr)))

    def _xr_insert(self, pr: _PairRec, slot: int):
        insort(pr.xr, slot)
        self._touch(_log_cost(len(pr.xr)))

    def _bprime_remove(self, key: tuple, pid: int, target):
        pr = self.pairs[key]
        bucket = pr.bprime.get(target)
        bucket.discard(pid)
        if not bucket:
            del pr.bprime[target]
        pr.bcount -= 1
        self._touch()

    def _bprime_insert(self, key: tuple, pid: int, target):
        pr = self._pair(key)
        pr.bprime.setdefault(target, set()).add(pid)
        pr.bcount += 1
        self._touch()

    def _retarget_bprime(self, l: int, pid: int, old_target, new_target):
        if old_target == new_target:
            return
        for key in self._chains(l, pid, "B"):
            self._bprime_remove(key, pid, old_target)
            self._bprime_insert(key, pid, new_target)

    # ------------------------------------------------------------------
    # candidate queries
    # ------------------------------------------------------------------

    def _kinetic_first_k(self, l: int, pid: int, m: int) -> list[int]:
        """First m wedge members of data point pid in cone l, by axis order.

        Streams the target sides of the pairs whose apex side contains pid;
        the point itself never appears in any of those streams.
        """
        streams = []
        for key in self._chains(l, pid, "B"):
            pr = self.pairs.get(key)
            if pr is not None and pr.xr:
                streams.append(pr.xr)
        return self._merge_streams(l, streams, (), m)

    def _merge_streams(self, l: int, streams, pinned, m: int) -> list[int]:
        heap = []
        for si, xr in enumerate(streams):
            heap.append((xr[0], si, 0))
        for pid in pinned:
            heap.append((self._x_slot(l, pid), -1, pid))
        heapq.heapify(heap)
        out: list[int] = []
        while heap and len(out) < m:
            slot, si, aux = heapq.heappop(heap)
            self._touch()
            if si < 0:
                out.append(aux)
            else:
                out.append(self._point_at_x_slot(l, slot))
                nxt = aux + 1
                if nxt < len(streams[si]):
                    heapq.heappush(heap, (streams[si][nxt], si, nxt))
        return out

    def _query_first_k(self, l: int, q: np.ndarray, m: int) -> list[int]:
        """First m wedge members for an arbitrary apex (value-closed bounds)."""
        n = self.n
        node_components: list[list[tuple[int, int]]] = []
        thresholds: list[float] = []
        pinned: set[int] = set()
        for j in range(self.d):
            li, sigma = self._u_role_of[l][j]
            vq = sigma * float(q @ self.lines[li].direction)
            thresholds.append(vq)
            rank = self._bisect_urank(l, j, vq)
            if rank >= n:
                return []
            nodes = []
            for lo, hi, mid in _internal_path(rank, n):
                if rank < mid:
                    nodes.append((lo, hi))
            node_components.append(nodes)
            pinned.add(self._point_at_u_rank(l, j, rank))
        checked = []
        for pid in sorted(pinned):
            ok = True
            for j in range(self.d):
                li, sigma = self._u_role_of[l][j]
                if sigma * float(self._position(pid) @ self.lines[li].direction) < thresholds[j]:
                    ok = False
                    break
            if ok:
                checked.append(pid)
        streams = []
        for combo in product(*node_components):
            pr = self.pairs.get((l, *combo))
            if pr is not None and pr.xr:
                streams.append(pr.xr)
        self._touch(len(streams) + len(pinned) + 1)
        return self._merge_streams(l, streams, tuple(checked), m)

    def _bisect_urank(self, l: int, j: int, vq: float) -> int:
        li, sigma = self._u_role_of[l][j]
        direction = self.lines[li].direction
        lo, hi = 0, self.n
        while lo < hi:
            mid = (lo + hi) // 2
            pid = self._point_at_u_rank(l, j, mid)
            val = sigma * float(self._position(pid) @ direction)
            if val < vq:
                lo = mid + 1
            else:
                hi = mid
            self._touch()
        return lo

    # ------------------------------------------------------------------
    # edges and neighbor-length lists
    # ------------------------------------------------------------------

    def _neighbors(self, pid: int) -> set[int]:
        out = set()
        for a, b in self.edge_origins:
            if a == pid:
                out.add(b)
            elif b == pid:
                out.add(a)
        return out

    def _origin_add(self, owner: int, l: int, target: int):
        key = (owner, target) if owner < target else (target, owner)
        bucket = self.edge_origins.get(key)
        if bucket is None:
            bucket = set()
            self.edge_origins[key] = bucket
            self._pending_edges.append(("add", key[0], key[1]))
        bucket.add((owner, l))
        self.revc[l].setdefault(target, set()).add(owner)
        self.stats.chi_k += 1
        self._touch()

    def _origin_remove(self, owner: int, l: int, target: int):
        key = (owner, target) if owner < target else (target, owner)
        bucket = self.edge_origins[key]
        bucket.discard((owner, l))
        owners = self.revc[l][target]
        owners.discard(owner)
        if not owners:
            del self.revc[l][target]
        if not bucket:
            del self.edge_origins[key]
            self._pending_edges.append(("remove", key[0], key[1]))
        self.stats.chi_k += 1
        self._touch()

    def _apply_candidates(self, l: int, pid: int, new: list[int]):
        old = self.cand[pid][l]
        if old == new:
            return
        old_kth = self._kth_of(pid, l)
        old_set = set(old)
        new_set = set(new)
        for t in old:
            if t not in new_set:
                self._origin_remove(pid, l, t)
        for t in new:
            if t not in old_set:
                self._origin_add(pid, l, t)
        self.cand[pid][l] = new
        self._retarget_bprime(l, pid, old_kth, self._kth_of(pid, l))

    def update_knn_lists(self) -> None:
        """Apply pending edge creations/removals to per-point length lists.

        A created edge is inserted into both endpoints' lists at its current
        squared-length position (distance ties break by neighbor id); removed
        edges are spliced out.  Adjacency certificates around every touched
        position are recomputed.
        """
        pending, self._pending_edges = self._pending_edges, []
        for op, x, y in pending:
            for host, other in ((x, y), (y, x)):
                lst = self.knn_order[host]
                if op == "add":
                    d2 = self._d2(host, other)
                    lo, hi = 0, len(lst)
                    while lo < hi:
                        mid = (lo + hi) // 2
                        entry = lst[mid]
                        if (self._d2(host, entry), entry) < (d2, other):
                            lo = mid + 1
                        else:
                            hi = mid
                        self._touch()
                    lst.insert(lo, other)
                    if lo > 0:
                        self._schedule_knn_cert(host, lo - 1)
                    if lo + 1 < len(lst):
                        self._schedule_knn_cert(host, lo)
                else:
                    idx = lst.index(other)
                    del lst[idx]
                    self._touch()
                    if 0 < idx < len(lst):
                        self._schedule_knn_cert(host, idx - 1)

    def kth_neighbor_sq(self, pid: int) -> float:
        """Squared distance from pid to its k-th nearest neighbor (O(1) read)."""
        lst = self.knn_order[pid]
        kth = lst[min(self.k, len(lst)) - 1]
        return self._d2(pid, kth)

    # ------------------------------------------------------------------
    # certificates
    # ------------------------------------------------------------------

    def _schedule_line_cert(self, li: int, ia: int):
        order = self._order[li]
        a, b = order[ia], order[ia + 1]
        lo, hi = (a, b) if a < b else (b, a)
        key = (li, lo, hi)
        both = self._line_flips.get(key)
        if both is None:
            # a degenerate pair (identical projections) yields no flips and
            # keeps its id order forever
            g = projected_difference(
                self.trajectories[lo], self.trajectories[hi], self.lines[li].direction
            )
            both = order_flip_transitions(g)
            self._line_flips[key] = both
        flips = both[0] if a == lo else both[1]
        self._touch()
        idx = bisect_right(flips, self.time)
        if idx >= len(flips):
            self._registry.pop(("L", li, a, b), None)
            return
        t_fail = flips[idx]
        self._registry[("L", li, a, b)] = t_fail
        heapq.heappush(self._heap, (t_fail, 0, li, a, b))

    def _schedule_knn_cert(self, owner: int, idx: int):
        lst = self.knn_order[owner]
        a, b = lst[idx], lst[idx + 1]
        lo, hi = (a, b) if a < b else (b, a)
        key = (owner, lo, hi)
        both = self._knn_flips.get(key)
        if both is None:
            g = poly_sub(
                squared_distance_poly(self.trajectories[owner], self.trajectories[lo]),
                squared_distance_poly(self.trajectories[owner], self.trajectories[hi]),
            )
            both = order_flip_transitions(g)
            self._knn_flips[key] = both
        flips = both[0] if a == lo else both[1]
        self._touch()
        pos = bisect_right(flips, self.time)
        if pos >= len(flips):
            self._registry.pop(("K", owner, a, b), None)
            return
        t_fail = flips[pos]
        self._registry[("K", owner, a, b)] = t_fail
        heapq.heappush(self._heap, (t_fail, 1, owner, a, b))

    def peek_event_time(self) -> float | None:
        """Earliest valid scheduled event time, or None when nothing is due."""
        while self._heap:
            t, kindrank, tag, a, b = self._heap[0]
            if self._event_valid(kindrank, tag, a, b, t):
                return t
            heapq.heappop(self._heap)
        return None

    def _event_valid(self, kindrank: int, tag: int, a: int, b: int, t: float) -> bool:
        if kindrank == 0:
            if self._registry.get(("L", tag, a, b)) != t:
                return False
            pos = self._pos[tag]
            return pos[a] + 1 == pos[b]
        if self._registry.get(("K", tag, a, b)) != t:
            return False
        lst = self.knn_order[tag]
        if a not in lst:
            return False
        ia = lst.index(a)
        return ia + 1 < len(lst) and lst[ia + 1] == b

    # ------------------------------------------------------------------
    # event processing
    # ------------------------------------------------------------------

    def advance(self, t_target: float, max_events: int | None = None) -> list[EventReport]:
        """Process all events due at or before t_target, then move time there.

        Events pop in (time, kind, line, low id, high id) order; certificates
        superseded by rescheduling are discarded silently on pop.  With
        ``max_events`` set, processing stops early and the clock stays at the
        last processed event time.
        """
        if t_target < self.time:
            raise TimeTravelError(
                f"cannot advance to t={t_target} behind current time {self.time}"
            )
        reports: list[EventReport] = []
        processed = 0
        while self._heap:
            entry = self._heap[0]
            t, kindrank, tag, a, b = entry
            if t > t_target:
                break
            heapq.heappop(self._heap)
            if not self._event_valid(kindrank, tag, a, b, t):
                continue
            if max_events is not None and processed >= max_events:
                heapq.heappush(self._heap, entry)
                return reports
            if t > self.time:
                self.time = t
                self._pos_cache.clear()
            if kindrank == 0:
                reports.append(self._process_line_event(tag, a, b))
                limit = len(self.lines) * max(1, self.s_max) * self.n * (self.n - 1) // 2
                assert self.stats.events <= limit, "swap event count exceeded degree bound"
            else:
                reports.append(self._process_knn_event(tag, a, b))
            processed += 1
        if t_target > self.time:
            self.time = t_target
            self._pos_cache.clear()
        return reports

    def _process_line_event(self, li: int, a: int, b: int) -> EventReport:
        touched_before = self.stats.touched_total
        assert not self._pending_edges
        order, pos = self._order[li], self._pos[li]
        ia = pos[a]
        event = SwapEvent(time=self.time, line_index=li, a=a, b=b)
        # One physical list swap serves every cone-role of this line; the
        # role handlers below never touch the list again.
        order[ia], order[ia + 1] = b, a
        pos[a], pos[b] = ia + 1, ia
        if ia > 0:
            self._schedule_line_cert(li, ia - 1)
        self._schedule_line_cert(li, ia)
        if ia + 2 < self.n:
            self._schedule_line_cert(li, ia + 1)
        self.handle_u_swap(event, pre_low=ia)
        self.handle_x_swap(event, pre_low=ia)
        edge_ops = tuple(self._pending_edges)
        self.update_knn_lists()
        self.stats.events += 1
        self.stats.touched_max = max(
            self.stats.touched_max, self.stats.touched_total - touched_before
        )
        return EventReport(
            time=self.time, kind="swap", line_index=li, a=a, b=b,
            edges_added=tuple(sorted((x, y) for op, x, y in edge_ops if op == "add")),
            edges_removed=tuple(sorted((x, y) for op, x, y in edge_ops if op == "remove")),
        )

    def handle_u_swap(self, event: SwapEvent, pre_low: int) -> None:
        """Facet-coordinate role updates for an adjacent swap on one line.

        Per cone using this line as a u-level: repair pair memberships along
        the two moved points' root paths (keeping target-side slot lists and
        apex-side companion maps in step), then refresh both points' wedge
        candidate lists in that cone and propagate any change of their k-th
        wedge point into every companion map that lists them.
        """
        li = event.line_index
        a, b = event.a, event.b
        for role in self.lines[li].roles:
            if role.kind != "u":
                continue
            l, j = role.cone, role.level
            self.stats.u_role_updates += 1
            if role.sigma > 0:
                pre_rank = {(j, a): pre_low, (j, b): pre_low + 1}
            else:
                pre_rank = {(j, a): self.n - 1 - pre_low, (j, b): self.n - 2 - pre_low}
            for pid in (a, b):
                pre_r = set(self._chains(l, pid, "R", override=pre_rank))
                post_r = set(self._chains(l, pid, "R"))
                slot = self._x_slot(l, pid)
                for key in pre_r - post_r:
                    self._xr_remove(self.pairs[key], slot)
                for key in post_r - pre_r:
                    self._xr_insert(self._pair(key), slot)
                pre_bc = set(self._chains(l, pid, "B", override=pre_rank))
                post_bc = set(self._chains(l, pid, "B"))
                target = self._kth_of(pid, l)
                for key in pre_bc - post_bc:
                    self._bprime_remove(key, pid, target)
                for key in post_bc - pre_bc:
                    self._bprime_insert(key, pid, target)
            for pid in (a, b):
                self._apply_candidates(l, pid, self._kinetic_first_k(l, pid, self.k))

    def handle_x_swap(self, event: SwapEvent, pre_low: int) -> None:
        """Axis-coordinate role updates for an adjacent swap on one line.

        Pair memberships never change here.  Target-side slot lists are fixed
        for pairs holding exactly one of the two points; then the apexes whose
        k-th wedge point was the earlier point (and whose wedge contains the
        later one) swap that candidate, which is exactly the set of graph
        changes this event causes.
        """
        li = event.line_index
        a, b = event.a, event.b
        for role in self.lines[li].roles:
            if role.kind != "x":
                continue
            l = role.cone
            self.stats.x_role_updates += 1
            if role.sigma > 0:
                p, q, r = a, b, pre_low
            else:
                p, q, r = b, a, self.n - 2 - pre_low
            # p held cone axis slot r, q held r+1; the physical swap already
            # exchanged them.
            rp = self._chains(l, p, "R")
            rq = self._chains(l, q, "R")
            rp_set, rq_set = set(rp), set(rq)
            for key in rp_set - rq_set:
                pr = self.pairs.get(key)
                if pr is not None:
                    self._xr_remove(pr, r)
                    self._xr_insert(pr, r + 1)
            for key in rq_set - rp_set:
                pr = self.pairs.get(key)
                if pr is not None:
                    self._xr_remove(pr, r + 1)
                    self._xr_insert(pr, r)
            # Snapshot both k-th-change apex sets before mutating anything,
            # so the two passes cannot observe each other's retargets.
            was_kth_q = []
            for key in rq:
                pr = self.pairs.get(key)
                if pr is None:
                    continue
                for w in sorted(pr.bprime.get(q, ())):
                    if self._rank_dominates(l, p, w):
                        was_kth_q.append(w)
            was_kth_p = []
            for key in rp:
                pr = self.pairs.get(key)
                if pr is None:
                    continue
                for w in sorted(pr.bprime.get(p, ())):
                    if self._rank_dominates(l, q, w):
                        was_kth_p.append(w)
            # interior reorder: both points already candidates of the apex,
            # below the k-th slot; candidate set and graph are unchanged
            for w in sorted(self.revc[l].get(p, ())):
                row = self.cand[w][l]
                try:
                    i = row.index(p)
                except ValueError:
                    continue
                self._touch()
                if i + 1 < len(row) and row[i + 1] == q:
                    if not (len(row) == self.k and i + 1 == self.k - 1):
                        row[i], row[i + 1] = row[i + 1], row[i]
            # k-th was q with p directly before it inside the wedge: the two
            # swap places inside the top k; no graph change
            for w in was_kth_q:
                row = self.cand[w][l]
                assert row[-1] == q and row[-2] == p
                row[-1], row[-2] = row[-2], row[-1]
                self._retarget_bprime(l, w, q, p)
            # k-th was p with q next in the wedge: q becomes the new k-th,
            # one candidate edge swaps
            for w in was_kth_p:
                row = self.cand[w][l]
                assert row[-1] == p and len(row) == self.k
                self._origin_remove(w, l, p)
                self._origin_add(w, l, q)
                row[-1] = q
                self._retarget_bprime(l, w, p, q)

    def _process_knn_event(self, owner: int, a: int, b: int) -> EventReport:
        touched_before = self.stats.touched_total
        lst = self.knn_order[owner]
        ia = lst.index(a)
        lst[ia], lst[ia + 1] = b, a
        if ia > 0:
            self._schedule_knn_cert(owner, ia - 1)
        self._schedule_knn_cert(owner, ia)
        if ia + 2 < len(lst):
            self._schedule_knn_cert(owner, ia + 1)
        self.stats.knn_swaps += 1
        self.stats.touched_max = max(
            self.stats.touched_max, self.stats.touched_total - touched_before
        )
        return EventReport(
            time=self.time, kind="knn", line_index=owner, a=a, b=b,
            edges_added=(), edges_removed=(),
        )

    # ------------------------------------------------------------------
    # queries and snapshots
    # ------------------------------------------------------------------

    def rknn_query(self, q: np.ndarray, t: float) -> RknnAnswer:
        """Reverse-kNN members of q at time t (advances the state to t)."""
        self.advance(t)
        c = self.family.cone_count
        candidates: set[int] = set()
        for l in range(c):
            candidates.update(self._query_first_k(l, q, self.k))
        assert len(candidates) <= c * self.k, "candidate bound c*k violated"
        members = []
        coincident = False
        for pid in sorted(candidates):
            d2 = float(np.sum((self._position(pid) - q) ** 2))
            if d2 == 0.0:
                coincident = True
            if d2 <= self.kth_neighbor_sq(pid):
                members.append(pid)
        return RknnAnswer(
            query=q, time=t, members=tuple(members),
            candidates_examined=len(candidates), coincident=coincident,
        )

    def candidate_snapshot(self) -> dict[int, tuple[tuple[int, ...], ...]]:
        return {
            pid: tuple(tuple(row) for row in rows)
            for pid, rows in enumerate(self.cand)
        }

    def graph_snapshot(self) -> ProximityGraph:
        return graph_from_candidates(
            self.candidate_snapshot(), self.n, self.k, self.family.cone_count
        )

    def knn_snapshot(self) -> KnnTable:
        rows = []
        rows_sq = []
        for pid in range(self.n):
            lst = self.knn_order[pid][: min(self.k, self.n - 1)]
            d2s = [self._d2(pid, q) for q in lst]
            rows.append(tuple((q, float(np.sqrt(d2))) for q, d2 in zip(lst, d2s)))
            rows_sq.append(tuple(float(d2) for d2 in d2s))
        return KnnTable(k=self.k, rows=tuple(rows), rows_sq=tuple(rows_sq))

    def pair_members(self, key: tuple) -> tuple[set[int], set[int]]:
        """Reconstruct a pair's apex/target sides from ranks (test support)."""
        l = key[0]
        b_side, r_side = set(), set()
        for pid in range(self.n):
            in_b = in_r = True
            for j, (lo, hi) in enumerate(key[1:]):
                mid = (lo + hi) // 2
                rank = self._u_rank(l, j, pid)
                if not lo <= rank < hi:
                    in_b = in_r = False
                    break
                if rank < mid:
                    in_r = False
                else:
                    in_b = False
            if in_b:
                b_side.add(pid)
            if in_r:
                r_side.add(pid)
        return b_side, r_side


def _future_key(state: KineticState, direction: np.ndarray):
    """Sort key resolving exact projection ties by imminent order after t0."""

    class _Item:
        __slots__ = ("pid",)

        def __init__(self, pid):
            self.pid = pid

        def __lt__(self, other):
            g = projected_difference(
                state.trajectories[self.pid],
                state.trajectories[other.pid],
                direction,
            )
            t0 = state.time
            coeffs = list(g)
            while coeffs:
                val = 0.0
                for c in reversed(coeffs):
                    val = val * t0 + c
                if val != 0.0:
                    return val < 0.0
                coeffs = [i * c for i, c in enumerate(coeffs)][1:]
            return self.pid < other.pid

    return _Item


def initialize(trajectories, k: int, family: ConeFamily, t0: float = 0.0) -> KineticState:
    """Build every kinetic structure at time t0 and schedule all certificates."""
    return KineticState(trajectories, k, family, t0)


def advance(state: KineticState, t_target: float, max_events: int | None = None):
    """Process events through t_target; returns chronological event reports."""
    return state.advance(t_target, max_events=max_events)


def update_knn_lists(state: KineticState) -> None:
    """Flush pending edge deltas into the per-point neighbor-length lists."""
    state.update_knn_lists()
