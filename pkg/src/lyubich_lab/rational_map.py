"""Arithmetic and local structure of a rational map on the Riemann sphere.

A map is the quotient of two coprime polynomials of degree at least two
overall.  Everything here is chart-aware: evaluation, local (branch)
degree, critical points, and the search for exceptional points all treat
infinity as an ordinary point by switching to the reciprocal coordinate.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _fiber, roots
from .errors import InvalidMapError, RootFindingFailure
from .sphere import INFINITY, SpherePoint, as_point, chordal

# Switch to the reciprocal chart beyond this modulus to keep evaluation
# well-conditioned in double precision.
CHART_LIMIT = 1e8

# Relative tolerance for the order of vanishing of shifted coefficients
# (local-degree and multiplicity detection).
_ORDER_TOL = 1e-7

# Relative tolerance for the coprimality check, |P(root of Q)| < tol * scale.
_COPRIME_TOL = 1e-9

_uid_counter = itertools.count(1)


@dataclass(frozen=True)
class CriticalDatum:
    """A critical point together with its local (branch) degree."""

    point: SpherePoint
    index: int


class RationalMap:
    """A rational map R = P/Q of degree >= 2, immutable after construction.

    Parameters
    ----------
    num, den : sequences of complex
        Ascending coefficients of P and Q.  Exact zero leading entries are
        trimmed; what remains must have nonzero leading coefficients, share
        no common root, and give max(deg P, deg Q) >= 2.
    name : str, optional
        Label used in reports.
    """

    __slots__ = ("num", "den", "degree", "name", "_uid", "_num_pad", "_den_pad",
                 "_num_rev", "_den_rev", "_wronskian", "_cache")

    def __init__(self, num, den, name: str | None = None):
        num = _exact_trim(num)
        den = _exact_trim(den)
        if np.all(den == 0):
            raise InvalidMapError("denominator is the zero polynomial")
        if np.all(num == 0):
            raise InvalidMapError("numerator is the zero polynomial")
        degree = max(num.size, den.size) - 1
        if degree < 2:
            raise InvalidMapError(f"degree {degree} < 2")
        _check_coprime(num, den)

        self.num = num
        self.den = den
        self.degree = degree
        self.name = name
        self._uid = next(_uid_counter)
        self._num_pad = np.concatenate([num, np.zeros(degree + 1 - num.size, dtype=complex)])
        self._den_pad = np.concatenate([den, np.zeros(degree + 1 - den.size, dtype=complex)])
        self._num_rev = self._num_pad[::-1].copy()
        self._den_rev = self._den_pad[::-1].copy()
        self._wronskian = None
        self._cache = {}

    # RationalMap is immutable in spirit; hashing by identity token keeps
    # instances usable as memoization keys.
    def __hash__(self):
        return hash(self._uid)

    def __eq__(self, other):
        return self is other

    def __repr__(self):
        label = self.name or f"deg{self.degree}"
        return f"RationalMap<{label}>"

    def describe(self) -> dict:
        return {
            "name": self.name,
            "degree": self.degree,
            "num": [[c.real, c.imag] for c in self.num],
            "den": [[c.real, c.imag] for c in self.den],
        }

    def wronskian(self) -> np.ndarray:
        """Coefficients of P'Q - PQ', the numerator of the derivative."""
        if self._wronskian is None:
            pd = roots.derivative(self.num)
            qd = roots.derivative(self.den)
            a = np.convolve(pd, self.den)
            b = np.convolve(self.num, qd)
            size = max(a.size, b.size)
            a = np.concatenate([a, np.zeros(size - a.size, dtype=complex)])
            b = np.concatenate([b, np.zeros(size - b.size, dtype=complex)])
            self._wronskian = roots.trim(a - b, 1e-12)
        return self._wronskian


def _exact_trim(coeffs) -> np.ndarray:
    c = np.asarray(list(coeffs), dtype=complex).ravel()
    if c.size == 0:
        raise InvalidMapError("empty coefficient list")
    if not np.all(np.isfinite(c)):
        raise InvalidMapError("coefficients must be finite")
    k = c.size - 1
    while k > 0 and c[k] == 0:
        k -= 1
    return c[: k + 1].copy()


def _check_coprime(num: np.ndarray, den: np.ndarray) -> None:
    if den.size <= 1:
        return
    for root in roots.aberth_roots(den):
        value = roots.polyval(num, root)
        scale = sum(abs(c) * max(1.0, abs(root)) ** k for k, c in enumerate(num))
        if abs(value) < _COPRIME_TOL * max(scale, 1e-300):
            raise InvalidMapError(
                f"numerator and denominator share a root near {root:.6g}")


# ----------------------------------------------------------------------
# evaluation


def evaluate(rmap: RationalMap, z) -> SpherePoint:
    """Apply the map to a sphere point, total on the sphere.

    Uses the direct chart for moderate |z| and the reciprocal chart at
    infinity or beyond the chart limit; poles map to infinity.
    """
    p = as_point(z)
    if p.infinite:
        return _evaluate_inverted(rmap, 0j)
    if abs(p.value) > CHART_LIMIT:
        return _evaluate_inverted(rmap, 1.0 / p.value)
    return _evaluate_direct(rmap, p.value)


def _evaluate_direct(rmap: RationalMap, z: complex) -> SpherePoint:
    a = complex(roots.polyval(rmap.num, z))
    b = complex(roots.polyval(rmap.den, z))
    return _quotient_point(a, b)


def _evaluate_inverted(rmap: RationalMap, s: complex) -> SpherePoint:
    a = complex(roots.polyval(rmap._num_rev, s))
    b = complex(roots.polyval(rmap._den_rev, s))
    return _quotient_point(a, b)


def _quotient_point(a: complex, b: complex) -> SpherePoint:
    if b == 0:
        return INFINITY
    w = a / b
    if math.isfinite(w.real) and math.isfinite(w.imag):
        return SpherePoint(w)
    return INFINITY


def evaluate_array(rmap: RationalMap, points: np.ndarray, inf_mask: np.ndarray):
    """Vectorized :func:`evaluate` over complex arrays with infinity masks."""
    points = np.asarray(points, dtype=complex)
    inf_mask = np.asarray(inf_mask, dtype=bool)
    out = np.zeros(points.shape, dtype=complex)
    out_inf = np.zeros(points.shape, dtype=bool)
    big = inf_mask | (np.abs(points) > CHART_LIMIT)

    direct = ~big
    if direct.any():
        z = points[direct]
        a = roots.polyval(rmap.num, z)
        b = roots.polyval(rmap.den, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = a / b
        bad = (b == 0) | ~np.isfinite(w)
        w = np.where(bad, 0j, w)
        out[direct] = w
        tmp = out_inf[direct]
        tmp[bad] = True
        out_inf[direct] = tmp

    if big.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(inf_mask[big], 0j, 1.0 / points[big])
        a = roots.polyval(rmap._num_rev, s)
        b = roots.polyval(rmap._den_rev, s)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = a / b
        bad = (b == 0) | ~np.isfinite(w)
        w = np.where(bad, 0j, w)
        out[big] = w
        tmp = out_inf[big]
        tmp[bad] = True
        out_inf[big] = tmp

    return out, out_inf


# ----------------------------------------------------------------------
# local structure


def branch_index(rmap: RationalMap, z) -> int:
    """Local degree of the map at a point (1 away from critical points).

    Computed as the order of vanishing of the shifted coefficients of
    P - R(z) Q at the point (or of Q at a pole), in the reciprocal chart
    when the point is at or near infinity.
    """
    p = as_point(z)
    if p.infinite:
        num, den, z0 = rmap._num_rev, rmap._den_rev, 0j
    elif abs(p.value) > CHART_LIMIT:
        num, den, z0 = rmap._num_rev, rmap._den_rev, 1.0 / p.value
    else:
        num, den, z0 = rmap._num_pad, rmap._den_pad, p.value

    b = roots.taylor_shift(den, z0)
    tol_b = _ORDER_TOL * np.max(np.abs(b))
    if abs(b[0]) <= tol_b:
        # Pole: local degree equals the order of the zero of the denominator.
        for k in range(1, b.size):
            if abs(b[k]) > tol_b:
                return k
        raise RootFindingFailure("denominator vanishes to full tested order")

    a = roots.taylor_shift(num, z0)
    w0 = a[0] / b[0]
    h = a - w0 * b
    tol_h = _ORDER_TOL * max(np.max(np.abs(h)), 1e-300)
    for k in range(1, h.size):
        if abs(h[k]) > tol_h:
            return k
    raise RootFindingFailure("could not determine the local degree")


def critical_points(rmap: RationalMap) -> list[CriticalDatum]:
    """All points of local degree >= 2, including infinity when branched.

    The finite candidates are the roots of the Wronskian P'Q - PQ'; each
    cluster is polished and its local degree recomputed independently.
    The result always satisfies the Riemann-Hurwitz count
    sum(index - 1) = 2 * degree - 2 exactly, or an error is raised.

    This list is the branched-point set used downstream: the basis
    machinery treats the members that meet the Julia set as the branch
    points requiring sector elements.
    """
    cached = rmap._cache.get("critical")
    if cached is not None:
        return cached

    w = rmap.wronskian()
    finite_roots = roots.aberth_roots(w) if w.size > 1 else np.zeros(0, dtype=complex)
    # Branching at infinity is detected directly; drop near-infinite noise.
    finite_roots = finite_roots[np.abs(finite_roots) <= _fiber._NEAR_INFINITY]
    clusters = _fiber.cluster_points(finite_roots, np.ones(finite_roots.size, dtype=int))

    data = []
    for point, mult in clusters:
        center = roots.polish_root(w, point.value, mult)
        e = branch_index(rmap, SpherePoint(center))
        if e >= 2:
            data.append(CriticalDatum(SpherePoint(center), e))
    e_inf = branch_index(rmap, INFINITY)
    if e_inf >= 2:
        data.append(CriticalDatum(INFINITY, e_inf))

    total = sum(d.index - 1 for d in data)
    if total != 2 * rmap.degree - 2:
        raise RootFindingFailure(
            f"Riemann-Hurwitz mismatch: sum(e-1) = {total}, "
            f"expected {2 * rmap.degree - 2}")
    data.sort(key=lambda d: d.point.sort_key())
    rmap._cache["critical"] = data
    return data


def fiber(rmap: RationalMap, w) -> list[tuple[SpherePoint, int]]:
    """Solutions of R(z) = w with multiplicities summing to the degree."""
    return _fiber.solve_fiber(rmap._num_pad, rmap._den_pad, rmap.degree, as_point(w))


def fixed_points(rmap: RationalMap) -> list[tuple[SpherePoint, complex | None]]:
    """Fixed points with multipliers R'(p) (None at a fixed infinity of
    branching order >= 2, where the multiplier is zero)."""
    cached = rmap._cache.get("fixed")
    if cached is not None:
        return cached
    n = rmap.degree
    f = np.concatenate([rmap._num_pad, [0j]]) - np.concatenate([[0j], rmap._den_pad])
    f = roots.trim(f, 1e-13)
    out = []
    if f.size > 1:
        raw = roots.aberth_roots(f)
        raw = raw[np.abs(raw) <= _fiber._NEAR_INFINITY]
        for point, mult in _fiber.cluster_points(raw, np.ones(raw.size, dtype=int)):
            z = roots.polish_root(f, point.value, mult)
            qv = complex(roots.polyval(rmap.den, z))
            wv = complex(roots.polyval(rmap.wronskian(), z))
            multiplier = wv / (qv * qv) if qv != 0 else None
            out.append((SpherePoint(z), multiplier))
    num_deg = rmap.num.size - 1
    den_deg = rmap.den.size - 1
    if num_deg > den_deg:
        if num_deg == den_deg + 1:
            multiplier = rmap.den[-1] / rmap.num[-1]
        else:
            multiplier = 0j
        out.append((INFINITY, multiplier))
    out.sort(key=lambda pm: pm[0].sort_key())
    rmap._cache["fixed"] = out
    return out


def exceptional_points(rmap: RationalMap) -> list[SpherePoint]:
    """The set of points with finite backward orbit (at most two).

    A point qualifies only when its fiber collapses to a single point and
    the collapse closes up into a fixed point or a two-cycle, so the
    candidates are the images of critical points of full branching order.
    """
    cached = rmap._cache.get("exceptional")
    if cached is not None:
        return cached
    n = rmap.degree
    candidates = []
    for datum in critical_points(rmap):
        if datum.index == n:
            candidates.append(evaluate(rmap, datum.point))

    found: list[SpherePoint] = []

    def record(p: SpherePoint):
        for q in found:
            if chordal(p, q) <= _fiber.CLUSTER_RADIUS:
                return
        found.append(p)

    for p in candidates:
        atoms = fiber(rmap, p)
        if len(atoms) != 1:
            continue
        z1 = atoms[0][0]
        if chordal(z1, p) <= _fiber.CLUSTER_RADIUS:
            record(p)
            continue
        atoms2 = fiber(rmap, z1)
        if len(atoms2) != 1:
            continue
        z2 = atoms2[0][0]
        if chordal(z2, p) <= _fiber.CLUSTER_RADIUS:
            record(p)
            record(z1)

    if len(found) > 2:
        raise RootFindingFailure("more than two exceptional candidates survived")
    found.sort(key=lambda q: q.sort_key())
    rmap._cache["exceptional"] = found
    return found


def is_exceptional(rmap: RationalMap, w) -> bool:
    p = as_point(w)
    return any(chordal(p, q) <= _fiber.CLUSTER_RADIUS
               for q in exceptional_points(rmap))


# ----------------------------------------------------------------------
# built-in maps

_BUILTIN_COEFFS = {
    "quad": ([0, 0, 1], [1]),
    "basilica": ([-1, 0, 1], [1]),
    "chebyshev": ([-2, 0, 1], [1]),
}


def builtin_map(name: str) -> RationalMap:
    """Named benchmark maps: quad (z^2), basilica (z^2-1), chebyshev (z^2-2)."""
    try:
        num, den = _BUILTIN_COEFFS[name]
    except KeyError:
        raise InvalidMapError(
            f"unknown map name {name!r}; choose from {sorted(_BUILTIN_COEFFS)}")
    return RationalMap(num, den, name=name)
