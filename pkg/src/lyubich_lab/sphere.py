"""Points on the Riemann sphere and the chordal metric.

Finite points are ordinary complex numbers; the point at infinity is a
tagged alternative.  All geometric comparisons in the package use the
chordal metric, which treats infinity like any other point and never
overflows for large moduli.
"""

import math
from dataclasses import dataclass

import numpy as np

# Moduli beyond this are metrically indistinguishable from infinity in
# double precision (chordal distance to infinity below ~1e-153).
_HUGE = 1e153


@dataclass(frozen=True)
class SpherePoint:
    """A point of the Riemann sphere: a finite complex value or infinity.

    Exactly one variant is active.  Finite values are always finite
    floating complex numbers; NaN and overflowed values are rejected.
    """

    value: complex
    infinite: bool = False

    def __post_init__(self):
        if self.infinite:
            object.__setattr__(self, "value", 0j)
        else:
            v = complex(self.value)
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError("finite sphere point must have finite coordinates")
            object.__setattr__(self, "value", v)

    @staticmethod
    def finite(z) -> "SpherePoint":
        return SpherePoint(complex(z))

    @staticmethod
    def infinity() -> "SpherePoint":
        return SpherePoint(0j, True)

    def sort_key(self) -> tuple:
        return (1 if self.infinite else 0, self.value.real, self.value.imag)

    def __repr__(self) -> str:
        if self.infinite:
            return "SpherePoint(inf)"
        return f"SpherePoint({self.value!r})"


INFINITY = SpherePoint.infinity()


def as_point(x) -> SpherePoint:
    """Coerce a complex number or SpherePoint to a SpherePoint."""
    if isinstance(x, SpherePoint):
        return x
    z = complex(x)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        return INFINITY
    return SpherePoint(z)


def _chordal_finite(z: complex, w: complex) -> float:
    az, aw = abs(z), abs(w)
    if az > _HUGE and aw > _HUGE:
        # Both effectively at infinity; invert (the metric is invariant
        # under z -> 1/z) to keep the arithmetic finite.
        z, w = 1.0 / z, 1.0 / w
        az, aw = abs(z), abs(w)
    elif az > _HUGE:
        return 2.0 / math.hypot(1.0, aw)
    elif aw > _HUGE:
        return 2.0 / math.hypot(1.0, az)
    if az > 1.0 and aw > 1.0:
        z, w = 1.0 / z, 1.0 / w
        az, aw = abs(z), abs(w)
    return 2.0 * abs(z - w) / (math.hypot(1.0, az) * math.hypot(1.0, aw))


def chordal(p, q) -> float:
    """Chordal distance between two points of the sphere (range [0, 2])."""
    p = as_point(p)
    q = as_point(q)
    if p.infinite and q.infinite:
        return 0.0
    if p.infinite:
        return 2.0 / math.hypot(1.0, abs(q.value))
    if q.infinite:
        return 2.0 / math.hypot(1.0, abs(p.value))
    return _chordal_finite(p.value, q.value)


def chordal_array(points: np.ndarray, inf_mask: np.ndarray, q) -> np.ndarray:
    """Chordal distances from each entry of a point array to a single point.

    `points` is a complex array with companion boolean `inf_mask`; entries
    flagged infinite have their complex value ignored.
    """
    q = as_point(q)
    points = np.asarray(points, dtype=complex)
    inf_mask = np.asarray(inf_mask, dtype=bool)
    norm = np.hypot(1.0, np.abs(points))
    if q.infinite:
        out = 2.0 / norm
    else:
        qn = math.hypot(1.0, abs(q.value))
        out = 2.0 * np.abs(points - q.value) / (norm * qn)
        out[inf_mask] = 2.0 / qn
        return out
    out = np.asarray(out)
    out[inf_mask] = 0.0
    return out
