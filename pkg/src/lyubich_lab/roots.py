"""Polynomial root finding for the preimage machinery.

The workhorse is a simultaneous (Aberth-Ehrlich) iteration with a
companion-matrix fallback.  Coefficients are ascending throughout the
package: ``c[k]`` multiplies ``z**k``.
"""

import cmath
import math

import numpy as np

from .errors import RootFindingFailure

MAX_ITERATIONS = 200
# A candidate is accepted as a root when |p(z)| falls below this times the
# evaluation scale sum(|c_k| |z|^k); this is a backward-error criterion.
RESIDUAL_TOL = 1e-12


def trim(coeffs, rel_tol: float = 0.0) -> np.ndarray:
    """Drop leading (high-order) coefficients at or below ``rel_tol * max|c|``."""
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    bound = rel_tol * np.max(np.abs(c))
    k = c.size - 1
    while k > 0 and abs(c[k]) <= bound:
        k -= 1
    return c[: k + 1].copy()


def polyval(coeffs, z):
    """Evaluate an ascending-coefficient polynomial by Horner's rule."""
    c = np.asarray(coeffs, dtype=complex)
    result = np.zeros_like(np.asarray(z, dtype=complex)) if np.ndim(z) else 0j
    for k in range(c.size - 1, -1, -1):
        result = result * z + c[k]
    return result


def derivative(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size <= 1:
        return np.zeros(1, dtype=complex)
    return c[1:] * np.arange(1, c.size)


def taylor_shift(coeffs, z0: complex) -> np.ndarray:
    """Coefficients of p(z0 + t) as a polynomial in t.

    Repeated synthetic division by (z - z0); the k-th remainder is the
    k-th Taylor coefficient.
    """
    work = list(np.asarray(coeffs, dtype=complex).ravel())
    n = len(work)
    out = np.zeros(n, dtype=complex)
    z0 = complex(z0)
    for i in range(n):
        top = len(work) - 1
        if top == 0:
            out[i] = work[0]
            break
        quotient = [0j] * top
        carry = work[top]
        for j in range(top - 1, -1, -1):
            quotient[j] = carry
            carry = work[j] + z0 * carry
        out[i] = carry
        work = quotient
    return out


def _eval_with_scale(c: list, z: complex) -> tuple[complex, float]:
    value = 0j
    scale = 0.0
    az = abs(z)
    for k in range(len(c) - 1, -1, -1):
        value = value * z + c[k]
        scale = scale * az + abs(c[k])
    return value, scale


def companion_roots(coeffs) -> np.ndarray:
    """Roots via the companion matrix (numpy's eigenvalue routine)."""
    c = trim(coeffs)
    if c.size <= 1:
        return np.zeros(0, dtype=complex)
    try:
        r = np.roots(c[::-1])
    except np.linalg.LinAlgError as exc:
        raise RootFindingFailure("companion eigenvalue solve failed") from exc
    if not np.all(np.isfinite(r)):
        raise RootFindingFailure("companion roots are not finite")
    return r


def aberth_roots(coeffs, max_iterations: int = MAX_ITERATIONS) -> np.ndarray:
    """All complex roots of a polynomial, with multiplicity as repeats.

    Parameters
    ----------
    coeffs : array_like
        Ascending coefficients; exact zero leading entries are ignored.
    max_iterations : int
        Iteration cap before falling back to the companion matrix.

    Returns
    -------
    ndarray of complex roots, length equal to the (trimmed) degree.
    Multiple roots come out as tight clusters, to be merged by the caller.

    Raises
    ------
    RootFindingFailure
        If neither the simultaneous iteration nor the fallback meets the
        residual criterion.
    """
    c = trim(coeffs)
    # Exact zero low-order coefficients contribute roots at the origin.
    zeros_at_origin = 0
    while c.size > 1 and c[0] == 0:
        c = c[1:]
        zeros_at_origin += 1
    degree = c.size - 1
    if degree == 0:
        return np.zeros(zeros_at_origin, dtype=complex)
    head = np.zeros(zeros_at_origin, dtype=complex)
    if degree == 1:
        return np.concatenate([head, [-c[0] / c[1]]])

    c = c / np.max(np.abs(c))
    clist = list(c)
    dlist = list(derivative(c))

    radius = 1.0 + max(abs(ck / c[-1]) for ck in c[:-1])
    offset = 0.3779
    z = [
        radius * cmath.exp(2j * math.pi * (k / degree + offset))
        for k in range(degree)
    ]

    converged = [False] * degree
    for _ in range(max_iterations):
        all_done = True
        for i in range(degree):
            if converged[i]:
                continue
            pv, scale = _eval_with_scale(clist, z[i])
            if abs(pv) <= RESIDUAL_TOL * max(scale, 1e-300):
                converged[i] = True
                continue
            all_done = False
            dv, _ = _eval_with_scale(dlist, z[i])
            if dv == 0:
                z[i] *= 1.0 + 1e-6 + 1e-6j
                continue
            newton = pv / dv
            repulsion = 0j
            for j in range(degree):
                if j != i:
                    dz = z[i] - z[j]
                    if dz == 0:
                        dz = 1e-14 * (1 + abs(z[i]))
                    repulsion += 1.0 / dz
            denom = 1.0 - newton * repulsion
            if denom == 0:
                z[i] -= newton
            else:
                z[i] -= newton / denom
        if all_done:
            return np.concatenate([head, np.array(z, dtype=complex)])

    # Fall back to the companion matrix and re-check residuals loosely;
    # multiple roots legitimately stop near sqrt(eps) accuracy.
    fallback = companion_roots(c)
    for zi in fallback:
        pv, scale = _eval_with_scale(clist, zi)
        if abs(pv) > 1e-6 * max(scale, 1e-300):
            raise RootFindingFailure(
                f"root finder did not converge (residual {abs(pv):.3e})"
            )
    return np.concatenate([head, fallback])


def polish_root(coeffs, z0: complex, multiplicity: int, steps: int = 3) -> complex:
    """Refine a root with the multiplicity-corrected Newton step.

    For an m-fold root, ``z -= m p/p'`` converges quadratically where the
    plain Newton step would stall at linear rate.
    """
    c = list(np.asarray(coeffs, dtype=complex).ravel())
    d = list(derivative(c))
    z = complex(z0)
    best = z
    best_res, _ = _eval_with_scale(c, z)
    for _ in range(steps):
        pv, _ = _eval_with_scale(c, z)
        dv, _ = _eval_with_scale(d, z)
        if dv == 0:
            break
        z = z - multiplicity * pv / dv
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            return best
        res, _ = _eval_with_scale(c, z)
        if abs(res) <= abs(best_res):
            best, best_res = z, res
    return best
