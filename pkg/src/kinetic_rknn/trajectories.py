"""Polynomial point trajectories and root isolation for certificate times.

Each moving point carries one polynomial per coordinate (constant term first,
degree at most a dataset-wide constant).  Kinetic certificates fail when two
points exchange order along some projection direction, i.e. at the real roots
of a projected difference polynomial.  Roots are isolated with a Descartes
sign-variation test on recursively subdivided intervals and refined by
bisection to an absolute time tolerance of 1e-9.

All functions here are pure and operate on immutable data; they are safe for
concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError

REFINE_TOL = 1e-9     # absolute tolerance on reported root times
_MERGE_TOL = 1e-12    # roots closer than this collapse into one
_CLUSTER_REL_TOL = 1e-9


@dataclass(frozen=True)
class Trajectory:
    """Trajectory of one point: per-coordinate polynomial coefficients.

    ``coeffs[i]`` holds the coefficients of coordinate i as a polynomial in
    time, constant term first.  Evaluation uses Horner's rule.
    """

    point_id: int
    coeffs: tuple[tuple[float, ...], ...]

    @staticmethod
    def make(point_id: int, coeffs) -> "Trajectory":
        return Trajectory(point_id, tuple(tuple(float(c) for c in row) for row in coeffs))

    @property
    def dimension(self) -> int:
        return len(self.coeffs)

    @property
    def degree(self) -> int:
        deg = 0
        for row in self.coeffs:
            for i in range(len(row) - 1, -1, -1):
                if row[i] != 0.0:
                    deg = max(deg, i)
                    break
        return deg

    def position(self, t: float) -> np.ndarray:
        """Position at time t, one Horner evaluation per coordinate."""
        return np.array([_horner(row, t) for row in self.coeffs])

    def coordinate(self, i: int, t: float) -> float:
        return _horner(self.coeffs[i], t)


def positions_at(trajectories, t: float) -> np.ndarray:
    """Stacked positions of many trajectories at time t, shape (n, d)."""
    return np.array([traj.position(t) for traj in trajectories])


@dataclass(frozen=True)
class Root:
    time: float
    parity: str  # "odd" or "even"


@dataclass(frozen=True)
class RootList:
    """Isolated real roots of a projected difference polynomial.

    ``identically_zero`` marks a degenerate pair whose difference polynomial
    vanishes everywhere; callers fall back to the point-id tie rule and
    schedule no events for such a pair.
    """

    roots: tuple[Root, ...]
    identically_zero: bool = False


def swap_times(a: Trajectory, b: Trajectory, projection, interval) -> RootList:
    """All roots of dot(position(a,t) - position(b,t), projection) in (t0, t1].

    Roots are refined to an absolute tolerance of 1e-9 and tagged with their
    multiplicity parity; odd roots are actual order exchanges, even roots are
    tangencies.  A root landing exactly on t1 (exact float zero) is included;
    roots at or before t0 are dropped.
    """
    if a.point_id == b.point_id:
        raise InvalidInputError("swap_times needs two distinct points")
    t0, t1 = float(interval[0]), float(interval[1])
    if not t0 < t1:
        raise InvalidParameterError(f"empty interval [{t0}, {t1}]")
    g = projected_difference(a, b, projection)
    if not g:
        return RootList(roots=(), identically_zero=True)
    roots = [
        Root(time, parity)
        for time, parity in isolate_roots(g, t0, t1)
        if time > t0
    ]
    if _horner(g, t1) == 0.0 and all(abs(r.time - t1) > _MERGE_TOL for r in roots):
        left = _robust_sign(g, t1 - max(REFINE_TOL, abs(t1) * 1e-12), -1.0)
        roots.append(Root(t1, "odd" if left != 0 else "even"))
        roots.sort(key=lambda r: r.time)
    return RootList(roots=tuple(roots))


def projected_difference(a: Trajectory, b: Trajectory, projection) -> list[float]:
    """Coefficients of dot(pos_a(t) - pos_b(t), projection), trimmed."""
    g: list[float] = []
    for i, w in enumerate(projection):
        w = float(w)
        if w == 0.0:
            continue
        diff = poly_sub(list(a.coeffs[i]), list(b.coeffs[i]))
        g = poly_add(g, [w * c for c in diff])
    return poly_trim(g)


def squared_distance_poly(a: Trajectory, b: Trajectory) -> list[float]:
    """Coefficients of |pos_a(t) - pos_b(t)|^2, degree at most 2s."""
    out: list[float] = []
    for i in range(len(a.coeffs)):
        diff = poly_sub(list(a.coeffs[i]), list(b.coeffs[i]))
        out = poly_add(out, poly_mul(diff, diff))
    return poly_trim(out)


# ----------------------------------------------------------------------
# dense polynomial helpers (coefficient lists, constant term first)
# ----------------------------------------------------------------------

def _horner(coeffs, t: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def poly_add(p, q) -> list[float]:
    n = max(len(p), len(q))
    return [
        (p[i] if i < len(p) else 0.0) + (q[i] if i < len(q) else 0.0)
        for i in range(n)
    ]


def poly_sub(p, q) -> list[float]:
    n = max(len(p), len(q))
    return [
        (p[i] if i < len(p) else 0.0) - (q[i] if i < len(q) else 0.0)
        for i in range(n)
    ]


def poly_mul(p, q) -> list[float]:
    if not p or not q:
        return []
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0.0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def poly_trim(p) -> list[float]:
    n = len(p)
    while n > 0 and p[n - 1] == 0.0:
        n -= 1
    return list(p[:n])


def poly_deriv(p) -> list[float]:
    return [i * c for i, c in enumerate(p)][1:]


def _taylor_shift(p: list[float], a: float) -> list[float]:
    """Coefficients of p(x + a), by repeated synthetic division."""
    out = list(p)
    n = len(out)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            out[j] += a * out[j + 1]
    return out


def _restrict(p: list[float], a: float, width: float) -> list[float]:
    """Coefficients of p(a + width * x); maps [0,1] onto [a, a+width]."""
    shifted = _taylor_shift(p, a)
    scale = 1.0
    out = []
    for c in shifted:
        out.append(c * scale)
        scale *= width
    return out


def _sign_variations(p) -> int:
    var = 0
    prev = 0
    for c in p:
        if c == 0.0:
            continue
        s = 1 if c > 0.0 else -1
        if prev != 0 and s != prev:
            var += 1
        prev = s
    return var


def _mobius_variations(p: list[float]) -> int:
    """Descartes bound on the number of roots of p in the open interval (0,1)."""
    reversed_p = list(reversed(p))
    return _sign_variations(_taylor_shift(reversed_p, 1.0))


def _robust_sign(p, x: float, step_dir: float) -> int:
    """Sign of p at x, nudging along step_dir if the value is an exact zero."""
    v = _horner(p, x)
    h = max(abs(x), 1.0) * 1e-15
    for _ in range(60):
        if v != 0.0:
            return 1 if v > 0.0 else -1
        x += step_dir * h
        h *= 2.0
        v = _horner(p, x)
    return 0


# ----------------------------------------------------------------------
# root isolation
# ----------------------------------------------------------------------

def isolate_roots(coeffs: list[float], lo: float, hi: float) -> list[tuple[float, str]]:
    """Isolated, refined roots of ``coeffs`` within [lo, hi], ascending.

    Returns (time, parity) pairs.  Sign-variation counts drive an interval
    subdivision; each var==1 interval with a sign change is refined by
    bisection, and unresolvable clusters below the width floor are reported
    as even-order touches only when the residual is tiny and the derivative
    changes sign (otherwise they are Descartes phantoms and are dropped).
    """
    p = poly_trim(coeffs)
    if len(p) <= 1:
        return []
    span = hi - lo
    unit = _restrict(p, lo, span)
    scale = max(abs(c) for c in unit)
    if scale == 0.0:
        return []
    floor = max(1e-15, min(0.25, 1e-12 / span))
    found: list[tuple[float, str]] = []
    stack = [(0.0, 1.0, unit)]
    while stack:
        x0, x1, q = stack.pop()
        var = _mobius_variations(q)
        if var == 0:
            continue
        t_lo = lo + span * x0
        t_hi = lo + span * x1
        s_lo = _robust_sign(p, t_lo, 1e-3 * (t_hi - t_lo))
        s_hi = _robust_sign(p, t_hi, -1e-3 * (t_hi - t_lo))
        if var == 1 and s_lo != 0 and s_hi != 0 and s_lo != s_hi:
            found.append((_bisect_root(p, t_lo, t_hi, s_lo), "odd"))
            continue
        if x1 - x0 <= floor:
            mid = 0.5 * (t_lo + t_hi)
            if s_lo != 0 and s_hi != 0 and s_lo != s_hi:
                found.append((_bisect_root(p, t_lo, t_hi, s_lo), "odd"))
            elif abs(_horner(p, mid)) <= _CLUSTER_REL_TOL * scale and _derivative_flips(p, t_lo, t_hi):
                found.append((mid, "even"))
            # otherwise: a phantom variation from a nearby complex pair
            continue
        xm = _split_point(q, x0, x1)
        w = (xm - x0) / (x1 - x0)
        left = [c * w**i for i, c in enumerate(q)]
        right = _restrict(q, w, 1.0 - w)
        stack.append((xm, x1, right))
        stack.append((x0, xm, left))
    found.sort(key=lambda item: item[0])
    return _merge_close(found)


def _split_point(q: list[float], x0: float, x1: float) -> float:
    # Split near the middle but never exactly on a root, so every recursion
    # boundary has a definite sign.
    for offset in (0.0, 1.0 / 64.0, -1.0 / 64.0, 1.0 / 32.0, -1.0 / 32.0, 1.0 / 16.0, -1.0 / 16.0):
        frac = 0.5 + offset
        if _horner(q, frac) != 0.0:
            return x0 + (x1 - x0) * frac
    return x0 + (x1 - x0) * 0.5


def _bisect_root(p, t_lo: float, t_hi: float, s_lo: int) -> float:
    while t_hi - t_lo > REFINE_TOL:
        mid = 0.5 * (t_lo + t_hi)
        if mid <= t_lo or mid >= t_hi:
            break
        v = _horner(p, mid)
        if v == 0.0:
            return mid
        if (1 if v > 0.0 else -1) == s_lo:
            t_lo = mid
        else:
            t_hi = mid
    return 0.5 * (t_lo + t_hi)


def _derivative_flips(p, t_lo: float, t_hi: float) -> bool:
    dp = poly_deriv(p)
    if not dp:
        return False
    return _robust_sign(dp, t_lo, -1e-6) != _robust_sign(dp, t_hi, 1e-6)


def _merge_close(found: list[tuple[float, str]]) -> list[tuple[float, str]]:
    merged: list[tuple[float, str]] = []
    for time, parity in found:
        if merged and time - merged[-1][0] < _MERGE_TOL:
            prev_time, prev_parity = merged[-1]
            combined = "even" if prev_parity == parity else "odd"
            merged[-1] = (prev_time, combined)
        else:
            merged.append((time, parity))
    return merged


# ----------------------------------------------------------------------
# certificate scheduling support
# ----------------------------------------------------------------------

def cauchy_bound(p: list[float]) -> float:
    """Upper bound on the absolute value of all real roots of p."""
    lead = p[-1]
    return 1.0 + max(abs(c / lead) for c in p[:-1]) if len(p) > 1 else 0.0


def real_roots(coeffs) -> list[float]:
    """All real roots of a dense polynomial, ascending.

    Closed forms through degree four (with a short Newton polish and a
    residual filter against phantom roots from near-degenerate discriminants);
    higher degrees fall back to companion-matrix eigenvalues.  Certificate
    scheduling calls this constantly, which is why it avoids the slower
    subdivision isolator used by :func:`swap_times`.
    """
    p = poly_trim(coeffs)
    deg = len(p) - 1
    if deg <= 0:
        return []
    if deg == 1:
        return [-p[0] / p[1]]
    if deg == 2:
        c0, c1, c2 = p
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc < 0.0:
            return []
        if disc == 0.0:
            return [-c1 / (2.0 * c2)]
        sq = math.sqrt(disc)
        qq = -0.5 * (c1 + sq) if c1 >= 0.0 else -0.5 * (c1 - sq)
        r1, r2 = qq / c2, c0 / qq
        return [r1, r2] if r1 <= r2 else [r2, r1]
    # Closed forms normalize by the leading coefficient; a tiny lead (nearly
    # degree-deficient polynomial, common for differences of squared-distance
    # polynomials) makes them lose finite roots to cancellation, so such
    # polynomials go to the balanced companion-matrix solver instead.
    graded = abs(p[-1]) < 1e-3 * max(abs(c) for c in p[:-1])
    if deg == 3 and not graded:
        raw = _cubic_roots(p[0] / p[3], p[1] / p[3], p[2] / p[3])
    elif deg == 4 and not graded:
        raw = _quartic_roots(p[0] / p[4], p[1] / p[4], p[2] / p[4], p[3] / p[4])
    else:
        raw = [
            float(r.real)
            for r in np.roots(list(reversed(p)))
            if abs(r.imag) <= 1e-8 * max(1.0, abs(r.real))
        ]
    dp = poly_deriv(p)
    polished = []
    for x in raw:
        for _ in range(2):
            v = _horner(p, x)
            dv = _horner(dp, x)
            if dv == 0.0:
                break
            step = v / dv
            if not math.isfinite(step):
                break
            x -= step
        if abs(_horner(p, x)) <= 1e-7 * _poly_scale_at(p, x):
            polished.append(x)
    polished.sort()
    out: list[float] = []
    for x in polished:
        if not out or x - out[-1] > 1e-10 * max(1.0, abs(x)):
            out.append(x)
    return out


def _poly_scale_at(p, x: float) -> float:
    ax = abs(x)
    scale = 0.0
    power = 1.0
    for c in p:
        scale += abs(c) * power
        power *= ax if ax > 1.0 else 1.0
    return max(scale, 1e-300)


def _cubic_roots(c0: float, c1: float, c2: float) -> list[float]:
    """Real roots of x^3 + c2 x^2 + c1 x + c0 (trigonometric/Cardano form)."""
    shift = c2 / 3.0
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2**3 / 27.0 - c2 * c1 / 3.0 + c0
    disc = -4.0 * p**3 - 27.0 * q * q
    if disc > 0.0:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg) / 3.0
        return [m * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift for k in (0, 1, 2)]
    half_q = -q / 2.0
    inner = math.sqrt(max(q * q / 4.0 + p**3 / 27.0, 0.0))
    u = _cbrt(half_q + inner)
    v = _cbrt(half_q - inner)
    return [u + v - shift]


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _quartic_roots(c0: float, c1: float, c2: float, c3: float) -> list[float]:
    """Real roots of x^4 + c3 x^3 + c2 x^2 + c1 x + c0 via the resolvent cubic."""
    shift = c3 / 4.0
    p = c2 - 3.0 * c3 * c3 / 8.0
    q = c1 - c3 * c2 / 2.0 + c3**3 / 8.0
    r = c0 - c3 * c1 / 4.0 + c3 * c3 * c2 / 16.0 - 3.0 * c3**4 / 256.0
    roots: list[float] = []
    if abs(q) <= 1e-14 * (1.0 + abs(p) + abs(r)):
        # biquadratic: solve w^2 + p w + r in w = y^2
        for w in real_roots([r, p, 1.0]):
            if w > 0.0:
                s = math.sqrt(w)
                roots.extend((-s - shift, s - shift))
            elif w == 0.0:
                roots.append(-shift)
        return roots
    resolvent = real_roots([4.0 * p * r - q * q, -4.0 * r, -p, 1.0])
    z = max(resolvent)
    alpha_sq = z - p
    if alpha_sq <= 0.0:
        return []
    alpha = math.sqrt(alpha_sq)
    beta = (z - q / alpha) / 2.0
    gamma = (z + q / alpha) / 2.0
    for aa, bb in ((alpha, beta), (-alpha, gamma)):
        disc = aa * aa - 4.0 * bb
        if disc >= 0.0:
            sq = math.sqrt(disc)
            roots.append((-aa - sq) / 2.0 - shift)
            roots.append((-aa + sq) / 2.0 - shift)
    return roots


def order_flip_transitions(coeffs) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Times where ``coeffs`` turns positive, and times where it turns negative.

    The first tuple holds the certificate failure times of the pair ordered
    (first, second); the second tuple serves the reversed pair, whose
    difference polynomial is the negation.  Both are time-invariant, so
    callers cache them and schedule with a binary search.
    """
    p = poly_trim(coeffs)
    deg = len(p) - 1
    if deg <= 0:
        return (), ()
    if deg == 1:
        root = -p[0] / p[1]
        return ((root,), ()) if p[1] > 0.0 else ((), (root,))
    roots = real_roots(p)
    if not roots:
        return (), ()
    sign = _robust_sign(p, roots[0] - 1.0, -1.0)
    up: list[float] = []
    down: list[float] = []
    for i, time in enumerate(roots):
        nxt = roots[i + 1] if i + 1 < len(roots) else time + 1.0
        after = _robust_sign(p, 0.5 * (time + nxt), 1.0)
        if sign < 0 and after > 0:
            up.append(time)
        elif sign > 0 and after < 0:
            down.append(time)
        sign = after
    return tuple(up), tuple(down)


def order_flip_times(coeffs) -> tuple[float, ...]:
    """Times at which ``coeffs`` transitions from negative to positive."""
    return order_flip_transitions(coeffs)[0]


def next_order_flip(coeffs, t_now: float) -> float | None:
    """First time strictly after t_now at which ``coeffs`` turns positive.

    A crossing at exactly t_now (e.g. the certificate that just fired) is
    skipped rather than re-fired; returns None when the order never flips
    again.
    """
    flips = order_flip_times(coeffs)
    for time in flips:
        if time > t_now:
            return time
    return None


def order_flip_times_isolated(coeffs) -> tuple[float, ...]:
    """Reference for :func:`order_flip_times` on the subdivision isolator."""
    p = poly_trim(coeffs)
    if len(p) <= 1:
        return ()
    bound = cauchy_bound(p) + 1.0
    roots = [t for t, _parity in isolate_roots(p, -bound, bound)]
    if not roots:
        return ()
    sign = _robust_sign(p, roots[0] - 1.0, -1.0)
    flips = []
    for i, time in enumerate(roots):
        nxt = roots[i + 1] if i + 1 < len(roots) else time + 1.0
        after = _robust_sign(p, 0.5 * (time + nxt), 1.0)
        if sign < 0 and after > 0:
            flips.append(time)
        sign = after
    return tuple(flips)
