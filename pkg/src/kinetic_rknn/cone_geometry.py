"""Cone partitions of R^d around an apex.

A :class:`ConeFamily` tiles the directions of R^d with finitely many simplicial
cones, each bounded by ``d`` facet half-spaces and carrying an axis direction.
Every other module projects points onto a cone's inward facet normals (the
``u_j`` coordinates) and onto its axis (the ``x_l`` coordinate); candidate
generation is a dominance query in the ``u`` coordinates followed by a scan in
ascending axis projection.

For d = 2 the family is the classical partition into ``2*ceil(pi/theta)``
equal wedges (six wedges of angle pi/3 at the default opening angle).  For
d >= 3 the family is built by refining the boundary simplices of the cross
polytope (the coordinate orthants) with longest-edge bisection until every
cone fits inside a circular cone of half-angle ``theta/2``.  The family is
centrally symmetric: cone ``l`` and cone ``reflect(l)`` have exactly opposite
axes and facet normals.

Families are immutable after construction and safe to share between threads.
They are always rebuilt from ``(dimension, opening_angle)``, never serialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InvalidParameterError

# Snap tolerance for directions that land exactly on a wedge boundary in 2-D.
_BOUNDARY_SNAP = 1e-12


@dataclass(frozen=True)
class Cone:
    """A simplicial cone: inward facet normals and an interior axis direction.

    A vector ``x`` lies in the closed cone iff ``dot(x, normal) >= 0`` for
    every facet normal.  The axis is a unit vector strictly inside.
    """

    axis: np.ndarray
    facet_normals: np.ndarray  # shape (d, d), row j is the unit normal u_j

    def __post_init__(self):
        self.axis.setflags(write=False)
        self.facet_normals.setflags(write=False)

    def contains_direction(self, vec: np.ndarray) -> bool:
        """Closed-cone membership test for a direction vector."""
        return bool(np.all(self.facet_normals @ vec >= 0.0))


@dataclass(frozen=True)
class ConeFamily:
    """A finite set of cones whose closed union covers all of R^d.

    ``cones[l]`` and ``cones[reflect(l)]`` are central reflections of each
    other, so ``q - p`` lies in cone ``l`` exactly when ``p - q`` lies in cone
    ``reflect(l)``.
    """

    dimension: int
    opening_angle: float
    cones: tuple[Cone, ...] = field(repr=False)

    @property
    def cone_count(self) -> int:
        return len(self.cones)

    def reflect(self, cone_index: int) -> int:
        """Index of the cone whose axis is the negation of ``cone_index``'s."""
        c = len(self.cones)
        return (cone_index + c // 2) % c

    # ------------------------------------------------------------------
    # classification
    # ------------------------------------------------------------------

    def classify_direction(self, vec: np.ndarray) -> int:
        """Unique cone index for a nonzero direction vector.

        In 2-D the wedge boundaries follow a half-open rule: a direction on
        the shared ray between wedge ``l-1`` and wedge ``l`` belongs to wedge
        ``l`` (the wedge that starts there).  In higher dimensions boundary
        directions go to the lowest-index cone whose closed cone contains
        them.
        """
        vec = np.asarray(vec, dtype=float)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0 or not np.isfinite(norm):
            raise DegenerateInputError("cannot classify a zero or non-finite direction")
        if self.dimension == 2:
            return self._classify_2d(vec)
        unit = vec / norm
        best_l = -1
        best_slack = -np.inf
        for l, cone in enumerate(self.cones):
            slack = float(np.min(cone.facet_normals @ unit))
            if slack >= 0.0:
                return l
            if slack > best_slack:
                best_slack = slack
                best_l = l
        # Covering guarantees slack >= -eps for some cone; take the least
        # violated one so the function stays total under roundoff.
        return best_l

    def _classify_2d(self, vec: np.ndarray) -> int:
        c = len(self.cones)
        wedge = 2.0 * math.pi / c
        theta = math.atan2(vec[1], vec[0])
        if theta < 0.0:
            theta += 2.0 * math.pi
        q = theta / wedge
        r = round(q)
        if abs(q - r) <= _BOUNDARY_SNAP:
            return int(r) % c
        return int(math.floor(q)) % c

    def classify(self, apex: np.ndarray, target: np.ndarray) -> int:
        """Cone index l with ``target`` inside the translate of cone l at ``apex``."""
        apex = np.asarray(apex, dtype=float)
        target = np.asarray(target, dtype=float)
        return self.classify_direction(target - apex)

    def classify_many(self, directions: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`classify_direction` over rows of ``directions``."""
        dirs = np.asarray(directions, dtype=float)
        norms = np.linalg.norm(dirs, axis=1, keepdims=True)
        if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
            raise DegenerateInputError("cannot classify zero or non-finite directions")
        if self.dimension == 2:
            c = len(self.cones)
            wedge = 2.0 * math.pi / c
            theta = np.arctan2(dirs[:, 1], dirs[:, 0])
            theta = np.where(theta < 0.0, theta + 2.0 * math.pi, theta)
            q = theta / wedge
            r = np.round(q)
            snapped = np.abs(q - r) <= _BOUNDARY_SNAP
            out = np.where(snapped, r, np.floor(q)).astype(int) % c
            return out
        unit = dirs / norms
        n = len(unit)
        assigned = np.full(n, -1, dtype=int)
        best_slack = np.full(n, -np.inf)
        best_l = np.zeros(n, dtype=int)
        for l, cone in enumerate(self.cones):
            slack = (unit @ cone.facet_normals.T).min(axis=1)
            newly = (slack >= 0.0) & (assigned == -1)
            assigned[newly] = l
            better = slack > best_slack
            best_slack[better] = slack[better]
            best_l[better] = l
        return np.where(assigned >= 0, assigned, best_l)

    # ------------------------------------------------------------------
    # projections
    # ------------------------------------------------------------------

    def cone_coords(self, cone_index: int, point: np.ndarray) -> tuple[np.ndarray, float]:
        """(u-coordinates, axis coordinate) of a point for one cone.

        ``u[j]`` is the projection onto facet normal j; the axis coordinate is
        the projection onto the cone axis.  Both are linear in the point.
        """
        cone = self.cones[cone_index]
        point = np.asarray(point, dtype=float)
        return cone.facet_normals @ point, float(point @ cone.axis)

    def u_coords_many(self, cone_index: int, points: np.ndarray) -> np.ndarray:
        """u-coordinates of many points at once, shape (n, d)."""
        return np.asarray(points, dtype=float) @ self.cones[cone_index].facet_normals.T

    def axis_coords_many(self, cone_index: int, points: np.ndarray) -> np.ndarray:
        """Axis projections of many points at once, shape (n,)."""
        return np.asarray(points, dtype=float) @ self.cones[cone_index].axis

    def wedge_mask(self, cone_index: int, apex: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points inside the closed wedge translated to ``apex``.

        Membership compares absolute u-coordinates (``u(point) >= u(apex)``
        componentwise), which is exactly the comparison the range trees run,
        so tree queries and brute-force scans agree bit for bit.
        """
        u_pts = self.u_coords_many(cone_index, points)
        u_apex = self.u_coords_many(cone_index, np.asarray(apex, dtype=float)[None, :])[0]
        return np.all(u_pts >= u_apex, axis=1)


def build_cone_family(dimension: int, opening_angle: float = math.pi / 3.0) -> ConeFamily:
    """Construct the cone family for a given dimension and opening angle.

    The construction is deterministic: the same arguments always produce the
    identical family, bit for bit.

    Raises:
        InvalidParameterError: if ``dimension < 2`` or the opening angle is
            not in ``(0, pi/3]``.
    """
    if not isinstance(dimension, (int, np.integer)) or dimension < 2:
        raise InvalidParameterError(f"dimension must be an integer >= 2, got {dimension!r}")
    if not (0.0 < opening_angle <= math.pi / 3.0 + 1e-15):
        raise InvalidParameterError(
            f"opening angle must lie in (0, pi/3], got {opening_angle!r}"
        )
    if dimension == 2:
        cones = _build_wedges_2d(opening_angle)
    else:
        cones = _build_simplicial_cones(dimension, opening_angle)
    return ConeFamily(dimension=int(dimension), opening_angle=float(opening_angle), cones=cones)


def _build_wedges_2d(opening_angle: float) -> tuple[Cone, ...]:
    # 2*ceil(pi/theta) equal wedges; exactly six at theta = pi/3.  The second
    # half is the exact (bitwise) negation of the first so that wedge l + c/2
    # is the reflection of wedge l.
    c = 2 * math.ceil(math.pi / opening_angle - 1e-12)
    wedge = 2.0 * math.pi / c
    cones = []
    for l in range(c // 2):
        a0 = l * wedge
        a1 = (l + 1) * wedge
        axis = np.array([math.cos(a0 + wedge / 2.0), math.sin(a0 + wedge / 2.0)])
        normals = np.array(
            [
                [-math.sin(a0), math.cos(a0)],   # inward normal of the start ray
                [math.sin(a1), -math.cos(a1)],   # inward normal of the end ray
            ]
        )
        cones.append(Cone(axis=axis, facet_normals=normals))
    reflected = [
        Cone(axis=-cone.axis, facet_normals=-cone.facet_normals) for cone in cones
    ]
    return tuple(cones + reflected)


def _build_simplicial_cones(dimension: int, opening_angle: float) -> tuple[Cone, ...]:
    """Simplicial cones for d >= 3 via longest-edge bisection of half-orthants.

    Start from the 2^(d-1) orthant simplices with positive first coordinate,
    split the longest edge (on the chord, renormalized to the sphere) until
    every simplex has all vertices within ``opening_angle/2`` of its axis.
    Because angular distance to an interior axis is convex over a small
    spherical simplex, the vertex bound certifies the bound for every
    direction inside the cone.  The second half of the family is the central
    reflection of the first, appended in the same order.
    """
    d = dimension
    half = opening_angle / 2.0
    queue: list[np.ndarray] = []
    for signs in _half_orthant_signs(d):
        rays = np.eye(d) * np.array(signs)[:, None]
        queue.append(rays)
    finished: list[np.ndarray] = []
    while queue:
        rays = queue.pop(0)
        axis = _axis_of(rays)
        worst = max(_angle(rays[i], axis) for i in range(d))
        if worst <= half:
            finished.append(rays)
            continue
        i, j = _longest_edge(rays)
        mid = rays[i] + rays[j]
        mid /= np.linalg.norm(mid)
        child_a = rays.copy()
        child_a[j] = mid
        child_b = rays.copy()
        child_b[i] = mid
        queue.append(child_a)
        queue.append(child_b)
    cones = [_cone_from_rays(rays) for rays in finished]
    reflected = [
        Cone(axis=-cone.axis, facet_normals=-cone.facet_normals) for cone in cones
    ]
    return tuple(cones + reflected)


def _half_orthant_signs(d: int):
    """Sign vectors of the orthants with positive first coordinate, in a fixed order."""
    out = []
    for bits in range(2 ** (d - 1)):
        signs = [1.0]
        for i in range(d - 1):
            signs.append(1.0 if (bits >> i) & 1 == 0 else -1.0)
        out.append(signs)
    return out


def _axis_of(rays: np.ndarray) -> np.ndarray:
    axis = rays.sum(axis=0)
    return axis / np.linalg.norm(axis)


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    return math.acos(min(1.0, max(-1.0, float(u @ v))))


def _longest_edge(rays: np.ndarray) -> tuple[int, int]:
    d = len(rays)
    best = (0, 1)
    best_len = -1.0
    for i in range(d):
        for j in range(i + 1, d):
            length = float(np.sum((rays[i] - rays[j]) ** 2))
            if length > best_len + 1e-15:
                best_len = length
                best = (i, j)
    return best


def _cone_from_rays(rays: np.ndarray) -> Cone:
    # Dual basis: normal j satisfies dot(ray_i, n_j) = delta_ij, so the cone
    # spanned by the rays is exactly {x : dot(x, n_j) >= 0 for all j}.
    duals = np.linalg.inv(rays).T
    norms = np.linalg.norm(duals, axis=1, keepdims=True)
    normals = duals / norms
    axis = _axis_of(rays)
    return Cone(axis=axis, facet_normals=normals)
