"""The fiber-averaging (Frobenius-Perron) transfer operator.

Applying the operator to a function a gives the new function
``w -> (1/n) * sum over R(z) = w of branch_index(z) * a(z)``.
Results are returned as lazily evaluable closures over fiber solves, so
compositions needed elsewhere stay exact.  Fibers are memoized per
(map, point) with an LRU budget because inner products hit the same
fibers over and over.

The density symbol of the invariant measure is the transfer of the
constant one, identically one here; the unitality checks in the test
suite pin that down.
"""

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .preimage_solver import WeightedPreimage, preimages
from .rational_map import RationalMap
from .sphere import as_point
from .test_functions import TestFunction

_CACHE_CAPACITY = 1 << 16
_cache: OrderedDict = OrderedDict()
_cache_lock = threading.Lock()


def cached_fiber(rmap: RationalMap, w) -> WeightedPreimage:
    """Memoized fiber solve; safe under concurrent access."""
    p = as_point(w)
    key = (rmap._uid, p.infinite, p.value.real, p.value.imag)
    with _cache_lock:
        hit = _cache.get(key)
        if hit is not None:
            _cache.move_to_end(key)
            return hit
    result = preimages(rmap, p)
    with _cache_lock:
        _cache[key] = result
        _cache.move_to_end(key)
        while len(_cache) > _CACHE_CAPACITY:
            _cache.popitem(last=False)
    return result


def clear_fiber_cache() -> None:
    with _cache_lock:
        _cache.clear()


def apply_transfer(rmap: RationalMap, a: TestFunction, w) -> complex:
    """One application of the transfer operator evaluated at a point."""
    fib = cached_fiber(rmap, w)
    total = 0j
    for point, mult in fib.atoms:
        total += mult * a(point)
    return total / rmap.degree


def transfer_power(rmap: RationalMap, a: TestFunction, m: int, w) -> complex:
    """m-fold application at a point, by direct recursion over fibers.

    This traversal is independent of the tree/measure code path; the two
    must agree to within accumulated roundoff.
    """
    if m < 0:
        raise ValueError("power must be non-negative")
    p = as_point(w)
    if m == 0:
        return complex(a(p))
    fib = cached_fiber(rmap, p)
    total = 0j
    for point, mult in fib.atoms:
        total += mult * transfer_power(rmap, a, m - 1, point)
    return total / rmap.degree


def transfer_function(rmap: RationalMap, a: TestFunction) -> TestFunction:
    """The transfer of a, as an evaluable closure."""
    return TestFunction.from_callable(
        lambda z: apply_transfer(rmap, a, z),
        name=f"L[{a.name}]")


@dataclass(frozen=True)
class TransferResult:
    """The transfer of a function: lazy form, optional table, closed form.

    ``function`` evaluates anywhere through fiber solves; ``table`` is the
    same values bound to a supplied evaluation set; ``closed_form`` is an
    exact polynomial expression, available when the input is a polynomial
    in pure powers of z or conj(z) and the map itself is a polynomial.
    """

    base: TestFunction
    function: TestFunction
    table: TestFunction | None = None
    closed_form: TestFunction | None = None


def _power_sum_polynomials(rmap: RationalMap, top: int) -> list[np.ndarray]:
    """Power sums of the fiber over w as polynomials in w (Newton's
    identities); valid for polynomial maps, where the fiber polynomial's
    leading coefficient does not depend on w.

    The fiber solves P(z) - w*den0 = 0, so only the product of the roots
    (the top elementary symmetric function) carries the w-dependence.
    """
    n = rmap.degree
    lead = rmap._num_pad[n]
    den0 = rmap.den[0]
    elementary = [np.array([1.0 + 0j])]
    for i in range(1, n + 1):
        sign = (-1.0) ** i
        if i < n:
            e = np.array([sign * rmap._num_pad[n - i] / lead], dtype=complex)
        else:
            e = np.array([sign * rmap._num_pad[0] / lead,
                          -sign * den0 / lead], dtype=complex)
        elementary.append(e)
    sums = [np.array([float(n)], dtype=complex)]
    for k in range(1, top + 1):
        acc = np.zeros(1, dtype=complex)
        for i in range(1, min(k - 1, n) + 1):
            term = _poly_mul(elementary[i], sums[k - i]) * ((-1.0) ** (i - 1))
            acc = _poly_add(acc, term)
        if k <= n:
            acc = _poly_add(acc, ((-1.0) ** (k - 1)) * k * elementary[k])
        sums.append(acc)
    return sums


def _poly_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(a, b)


def _poly_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    size = max(a.size, b.size)
    out = np.zeros(size, dtype=complex)
    out[: a.size] += a
    out[: b.size] += b
    return out


def _closed_form_transfer(rmap: RationalMap, a: TestFunction) -> TestFunction | None:
    if a.kind != "poly" or rmap.den.size != 1:
        return None
    keys = list(a._coeffs)
    if any(j > 0 and k > 0 for j, k in keys):
        return None
    top = max((max(j, k) for j, k in keys), default=0)
    sums = _power_sum_polynomials(rmap, top)
    n = rmap.degree
    coeffs: dict = {}
    for (j, k), c in a._coeffs.items():
        if j == 0 and k == 0:
            coeffs[(0, 0)] = coeffs.get((0, 0), 0j) + c
            continue
        if k == 0:
            poly = sums[j] / n
            for i, b in enumerate(poly):
                if b != 0:
                    coeffs[(i, 0)] = coeffs.get((i, 0), 0j) + c * b
        else:
            # sum of conj(z)^k over the fiber is the conjugate power sum
            poly = sums[k] / n
            for i, b in enumerate(poly):
                if b != 0:
                    coeffs[(0, i)] = coeffs.get((0, i), 0j) + c * b.conjugate()
    return TestFunction.polynomial(coeffs, name=f"L[{a.name}] closed form")


def transfer_result(rmap: RationalMap, a: TestFunction,
                    points=None, inf_mask=None) -> TransferResult:
    """Package the transfer of a function, with a pointwise table on an
    optional evaluation set and an exact polynomial child when available."""
    function = transfer_function(rmap, a)
    table = None
    if points is not None:
        points = np.asarray(points, dtype=complex)
        if inf_mask is None:
            inf_mask = np.zeros(points.shape, dtype=bool)
        values = function.evaluate(points, inf_mask)
        table = TestFunction.from_table(points, inf_mask, values,
                                        name=f"L[{a.name}] table")
    return TransferResult(base=a, function=function, table=table,
                          closed_form=_closed_form_transfer(rmap, a))


def inner_product(rmap: RationalMap, xi: TestFunction, eta: TestFunction) -> TestFunction:
    """The module inner product: the transfer of conj(xi) * eta.

    Conjugate-symmetric, and positive on the diagonal since each fiber
    term is branch_index * |xi|^2.
    """
    integrand = xi.conj() * eta
    return TestFunction.from_callable(
        lambda z: apply_transfer(rmap, integrand, z),
        name=f"<{xi.name},{eta.name}>")


def sup_norm_2(rmap: RationalMap, xi: TestFunction, sample) -> float:
    """Max over the sample of sqrt(<xi, xi>), the bimodule 2-norm estimate.

    Monotone under sample refinement.
    """
    points = list(sample)
    if not points:
        raise ValueError("sample must be nonempty")
    ip = inner_product(rmap, xi, xi)
    worst = 0.0
    for w in points:
        value = ip(w).real
        if value > worst:
            worst = value
    return worst ** 0.5
