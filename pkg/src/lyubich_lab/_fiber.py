"""Internal engine: solve R(z) = w with multiplicities on the sphere.

Works on padded coefficient arrays so it can be shared by the map-level
operations (critical and exceptional point search) and the public preimage
solver without import cycles.
"""

import numpy as np

from . import roots
from .errors import RootFindingFailure
from .sphere import INFINITY, SpherePoint, chordal

# Chordal radius under which numerically distinct roots are one atom:
# double roots perturb as conjugate pairs at the sqrt of the residual
# tolerance, and sqrt(1e-12) = 1e-6.
CLUSTER_RADIUS = 1e-6

# Finite roots beyond this modulus are chordally inside the cluster radius
# of infinity and are merged into an existing atom at infinity.
_NEAR_INFINITY = 2.0 / CLUSTER_RADIUS

# Relative cancellation tolerance when deciding the degree drop of
# num - w * den at the leading coefficients.
_CANCEL_TOL = 1e-10


def cluster_points(points, mults, radius: float = CLUSTER_RADIUS,
                   include_infinity: int = 0):
    """Merge points closer than ``radius`` in the chordal metric.

    Parameters
    ----------
    points : sequence of complex finite candidates.
    mults : matching integer multiplicities.
    include_infinity : multiplicity of a pre-existing atom at infinity;
        huge finite candidates merge into it.

    Returns
    -------
    list of (SpherePoint, int), unsorted.
    """
    pts = [complex(p) for p in points]
    ms = [int(m) for m in mults]
    inf_mult = int(include_infinity)
    if inf_mult > 0:
        keep_pts, keep_ms = [], []
        for p, m in zip(pts, ms):
            if abs(p) > _NEAR_INFINITY:
                inf_mult += m
            else:
                keep_pts.append(p)
                keep_ms.append(m)
        pts, ms = keep_pts, keep_ms

    order = sorted(range(len(pts)), key=lambda i: (pts[i].real, pts[i].imag))
    parent = list(range(len(pts)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in range(len(order)):
        i = order[a]
        for b in range(a + 1, len(order)):
            j = order[b]
            # Sorted by real part: once the real gap alone exceeds the
            # radius no later point can be within it.
            if (pts[j].real - pts[i].real) > radius:
                break
            if chordal(SpherePoint(pts[i]), SpherePoint(pts[j])) <= radius:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri

    groups = {}
    for i in range(len(pts)):
        groups.setdefault(find(i), []).append(i)

    out = []
    for members in groups.values():
        total = sum(ms[i] for i in members)
        center = sum(pts[i] * ms[i] for i in members) / total
        out.append((SpherePoint(center), total))
    if inf_mult > 0:
        out.append((INFINITY, inf_mult))
    return out


def _effective_degree(num_pad: np.ndarray, den_pad: np.ndarray, w: complex) -> int:
    """Degree of num - w*den after removing leading coefficients that
    cancel (relative to the magnitudes being subtracted)."""
    d = num_pad.size - 1
    while d > 0:
        lead = num_pad[d] - w * den_pad[d]
        scale = abs(num_pad[d]) + abs(w) * abs(den_pad[d])
        if abs(lead) > _CANCEL_TOL * scale:
            break
        d -= 1
    return d


def solve_fiber(num_pad: np.ndarray, den_pad: np.ndarray, degree: int,
                w: SpherePoint) -> list[tuple[SpherePoint, int]]:
    """All solutions of R(z) = w with multiplicities; total equals degree.

    ``num_pad`` and ``den_pad`` are ascending coefficient arrays padded to
    length ``degree + 1``.
    """
    if w.infinite:
        den = roots.trim(den_pad)
        inf_mult = degree - (den.size - 1)
        h = den
    else:
        h_full = num_pad - w.value * den_pad
        d_eff = _effective_degree(num_pad, den_pad, w.value)
        h = h_full[: d_eff + 1]
        inf_mult = degree - d_eff

    finite_roots = roots.aberth_roots(h) if h.size > 1 else np.zeros(0, dtype=complex)
    atoms = cluster_points(finite_roots, np.ones(finite_roots.size, dtype=int),
                           include_infinity=inf_mult)

    polished = []
    for point, mult in atoms:
        if point.infinite or mult == 0:
            polished.append((point, mult))
            continue
        z = roots.polish_root(h, point.value, mult)
        polished.append((SpherePoint(z), mult))

    total = sum(m for _, m in polished)
    if total != degree:
        raise RootFindingFailure(
            f"fiber multiplicities sum to {total}, expected {degree}")
    polished.sort(key=lambda pm: pm[0].sort_key())
    return polished
