"""Countable bases for the function bimodule over the Julia set.

Elements are square roots of a partition of unity subordinate to supports
on which the map is injective: smooth radial bumps centered on a greedy
net of a Julia-set sample, normalized so the squares sum to the map degree
on the sample.  Around each branch point that meets the Julia set, the net
is replaced by ladders of shrinking annular sector bumps whose supports
separate the local branches; supports shrink toward branch points with
increasing element index, which gives every function vanishing near the
branch points a finite tail of disjoint elements.

Reconstruction at the branch points themselves is reported by the
verification harness, not asserted; everywhere else the normalization
makes the reconstruction identity hold to roundoff.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CoverFailure, DegenerateSample
from .preimage_solver import sampled_tree
from .rational_map import RationalMap, critical_points, evaluate
from .sphere import INFINITY, SpherePoint, as_point, chordal, chordal_array
from .test_functions import TestFunction
from .transfer_operator import cached_fiber

_SECTOR_GAP = 0.1            # radians removed from each sector's full width
_SUPPORT_FACTOR = 1.3        # bump support radius over net radius
_SECTOR_LADDER_CAP = 16


@dataclass
class JuliaSample:
    """Deterministic sample of the Julia set from deep preimage atoms."""

    map: RationalMap
    points: np.ndarray
    inf_mask: np.ndarray
    method: str
    seed: int

    @property
    def size(self) -> int:
        return self.points.size

    def sphere_points(self) -> list[SpherePoint]:
        return [INFINITY if self.inf_mask[i] else SpherePoint(complex(self.points[i]))
                for i in range(self.size)]


def julia_sample(rmap: RationalMap, size: int, seed: int,
                 depth: int | None = None) -> JuliaSample:
    """Sample the Julia set via the deepest level of a sampled preimage tree.

    Backward orbits of any non-exceptional point accumulate on the Julia
    set; depth >= 12 puts the atoms within sampling tolerance of it.
    Deterministic for a given seed; at most ``size`` points, deduplicated
    and sorted.
    """
    from .lyubich_measure import default_root

    if size < 1:
        raise DegenerateSample("sample size must be positive")
    if depth is None:
        depth = max(12, int(math.ceil(math.log2(max(size, 2)))) + 2)
    root = default_root(rmap)
    tree = sampled_tree(rmap, root, depth, branches_per_node=2, seed=seed)
    lvl = tree.level(depth)

    order = np.lexsort((lvl.points.imag, lvl.points.real, lvl.infinite))
    pts = lvl.points[order]
    infs = lvl.infinite[order]
    keep = np.ones(pts.size, dtype=bool)
    for i in range(1, pts.size):
        if infs[i] and infs[i - 1]:
            keep[i] = False
        elif not infs[i] and not infs[i - 1] and pts[i] == pts[i - 1]:
            keep[i] = False
    pts, infs = pts[keep], infs[keep]

    if pts.size > size:
        idx = np.unique(np.round(np.linspace(0, pts.size - 1, size)).astype(int))
        pts, infs = pts[idx], infs[idx]

    return JuliaSample(map=rmap, points=pts, inf_mask=infs,
                       method=f"sampled-tree(depth={depth},branches=2)", seed=seed)


# ----------------------------------------------------------------------
# separation radius


def branch_separation_radius(rmap: RationalMap, sample: JuliaSample) -> float:
    """Largest r such that every sample point farther than 2r from all
    critical points has pairwise fiber gaps above 4r (bisection).

    Guarantees that a bump of support diameter below 2r centered away from
    the critical points meets each fiber in at most one atom.
    """
    if sample.size < 2:
        raise DegenerateSample("need at least two sample points")
    crit = [d.point for d in critical_points(rmap)]

    dist_crit = np.full(sample.size, np.inf)
    for c in crit:
        dist_crit = np.minimum(dist_crit, chordal_array(sample.points, sample.inf_mask, c))

    min_gap = np.full(sample.size, np.inf)
    for i in range(sample.size):
        z = INFINITY if sample.inf_mask[i] else SpherePoint(complex(sample.points[i]))
        fib = cached_fiber(rmap, evaluate(rmap, z))
        atoms = fib.points()
        for a in range(len(atoms)):
            for b in range(a + 1, len(atoms)):
                gap = chordal(atoms[a], atoms[b])
                if gap < min_gap[i]:
                    min_gap[i] = gap

    def ok(r: float) -> bool:
        included = dist_crit > 2 * r
        if not included.any():
            return False
        return bool(np.all(min_gap[included] > 4 * r))

    lo, hi = 0.0, 1.0
    if not ok(1e-9):
        raise DegenerateSample("no positive separation radius on this sample")
    lo = 1e-9
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ----------------------------------------------------------------------
# bumps and the shared partition


@dataclass(frozen=True)
class SectorSpec:
    """Angular sector data for elements near a branch point."""

    axis: float          # direction of the sector center in the local chart
    halfwidth: float     # angular half-extent
    r_inner: float       # annulus bounds in the chordal metric
    r_outer: float


@dataclass(frozen=True)
class _RawBump:
    center: SpherePoint
    radius: float        # support radius (outer radius for sectors)
    exponent: int
    sector: SectorSpec | None = None

    def values(self, points: np.ndarray, inf_mask: np.ndarray) -> np.ndarray:
        d = chordal_array(points, inf_mask, self.center)
        if self.sector is None:
            t = d / self.radius
            out = np.clip(1.0 - t * t, 0.0, None) ** self.exponent
            return out
        spec = self.sector
        mid = 0.5 * (spec.r_inner + spec.r_outer)
        half = 0.5 * (spec.r_outer - spec.r_inner)
        t = (d - mid) / half
        radial = np.clip(1.0 - t * t, 0.0, None) ** self.exponent
        if self.center.infinite:
            with np.errstate(divide="ignore", invalid="ignore"):
                local = np.where(points == 0, np.inf, 1.0 / points)
        else:
            local = points - self.center.value
        ang = np.angle(local)
        diff = np.angle(np.exp(1j * (ang - spec.axis)))
        t = diff / spec.halfwidth
        angular = np.clip(1.0 - t * t, 0.0, None) ** self.exponent
        angular = np.where(inf_mask, 0.0, angular)
        return radial * angular


class PartitionOfUnity:
    """Shared normalizer: raw bumps plus the degree scaling.

    Member i evaluates to sqrt(degree * raw_i / sum(raw)), which makes the
    squares sum to the degree exactly wherever any bump is positive.
    """

    def __init__(self, degree: int, bumps: list):
        self.degree = degree
        self.bumps = bumps

    def raw_matrix(self, points, inf_mask=None) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        if inf_mask is None:
            inf_mask = np.zeros(points.shape, dtype=bool)
        return np.array([b.values(points, inf_mask) for b in self.bumps])

    def member_matrix(self, points, inf_mask=None) -> np.ndarray:
        raw = self.raw_matrix(points, inf_mask)
        total = raw.sum(axis=0)
        safe = np.where(total > 0.0, total, 1.0)
        members = np.sqrt(self.degree * raw / safe)
        members[:, total <= 0.0] = 0.0
        return members


@dataclass(frozen=True)
class BasisElement:
    """One element: a normalized bump, evaluable everywhere."""

    index: int
    bump: _RawBump
    partition: PartitionOfUnity

    @property
    def center(self) -> SpherePoint:
        return self.bump.center

    @property
    def support_radius(self) -> float:
        return self.bump.radius

    @property
    def is_sector(self) -> bool:
        return self.bump.sector is not None

    @property
    def scale(self) -> float:
        return math.sqrt(self.partition.degree)

    def evaluate(self, points, inf_mask=None) -> np.ndarray:
        return self.partition.member_matrix(points, inf_mask)[self.index]

    def __call__(self, z) -> float:
        p = as_point(z)
        pts = np.array([p.value], dtype=complex)
        infs = np.array([p.infinite])
        return float(self.evaluate(pts, infs)[0])

    def function(self) -> TestFunction:
        return TestFunction.from_callable(
            lambda z: complex(self(z)),
            name=f"u{self.index}",
            at_infinity=complex(self(INFINITY)))


def basis_to_json(basis: list, path=None) -> str:
    """Export as JSON: list of {center, radius, profile, scale, sector?}."""
    records = []
    for el in basis:
        rec = {
            "center": "inf" if el.center.infinite else
                      [el.center.value.real, el.center.value.imag],
            "radius": el.support_radius,
            "profile": el.bump.exponent,
            "scale": el.scale,
        }
        if el.is_sector:
            s = el.bump.sector
            rec["sector"] = {"axis": s.axis, "halfwidth": s.halfwidth,
                             "r_inner": s.r_inner, "r_outer": s.r_outer}
        records.append(rec)
    text = json.dumps(records, indent=2)
    if path is not None:
        with open(path, "w") as handle:
            handle.write(text)
    return text


# ----------------------------------------------------------------------
# net construction


def _pairwise_dist_to(points, inf_mask, center: SpherePoint) -> np.ndarray:
    return chordal_array(points, inf_mask, center)


def farthest_point_net(points: np.ndarray, inf_mask: np.ndarray,
                       radius: float | None = None,
                       count: int | None = None) -> tuple[list[int], float]:
    """Greedy farthest-point net over a point set.

    Stops when the coverage radius drops to ``radius`` or when ``count``
    centers have been chosen, whichever comes first.  Returns the chosen
    indices (in insertion order) and the final coverage radius.
    """
    m = points.size
    if m == 0:
        return [], 0.0
    chosen = [0]
    first = INFINITY if inf_mask[0] else SpherePoint(complex(points[0]))
    cover = _pairwise_dist_to(points, inf_mask, first)
    while True:
        worst = float(cover.max())
        if radius is not None and worst <= radius:
            break
        if count is not None and len(chosen) >= count:
            break
        if len(chosen) >= m:
            break
        nxt = int(cover.argmax())
        chosen.append(nxt)
        c = INFINITY if inf_mask[nxt] else SpherePoint(complex(points[nxt]))
        cover = np.minimum(cover, _pairwise_dist_to(points, inf_mask, c))
    return chosen, float(cover.max())


def net_radius(sample: JuliaSample, count: int) -> float:
    """Coverage radius of the greedy net with exactly ``count`` centers."""
    _, cover = farthest_point_net(sample.points, sample.inf_mask, count=count)
    return cover


def branch_points_on_julia(rmap: RationalMap, sample: JuliaSample) -> list:
    """Critical points that meet the sampled Julia set."""
    if sample.size < 2:
        return []
    # The sample concentrates where the balanced measure does, so local
    # gaps can be several times the median spacing (e.g. the arcsine law
    # is sparse mid-interval); 6x keeps on-set critical points detected.
    spacing = _median_spacing(sample)
    threshold = max(6.0 * spacing, 1e-3)
    out = []
    for datum in critical_points(rmap):
        d = float(np.min(chordal_array(sample.points, sample.inf_mask, datum.point)))
        if d <= threshold:
            out.append(datum)
    return out


def _median_spacing(sample: JuliaSample) -> float:
    pts, infs = sample.points, sample.inf_mask
    nearest = np.full(sample.size, np.inf)
    for i in range(sample.size):
        p = INFINITY if infs[i] else SpherePoint(complex(pts[i]))
        d = chordal_array(pts, infs, p)
        d[i] = np.inf
        nearest[i] = d.min()
    return float(np.median(nearest))


def build_basis(rmap: RationalMap, sample: JuliaSample, r: float,
                count_cap: int = 256) -> list:
    """Basis from a greedy r-net of the sample plus branch-point sectors.

    Net bumps have support radius 1.3 r; callers should keep
    2.6 r below the branch separation radius so that the map stays
    injective on each support.  Elements away from branch points come
    first; sector ladders shrink toward each branch point with increasing
    index.  Raises CoverFailure when the net cannot cover the sample at
    radius r within the element cap, or when normalization would divide
    by zero away from the branch points.
    """
    if r <= 0:
        raise ValueError("net radius must be positive")
    n = rmap.degree
    pts, infs = sample.points, sample.inf_mask
    branch = branch_points_on_julia(rmap, sample)
    rho0 = 4.0 * r

    if branch:
        pool_mask = np.ones(sample.size, dtype=bool)
        for datum in branch:
            pool_mask &= chordal_array(pts, infs, datum.point) > rho0
    else:
        pool_mask = np.ones(sample.size, dtype=bool)
    pool_idx = np.nonzero(pool_mask)[0]
    if pool_idx.size == 0 and not branch:
        raise CoverFailure("empty sample")

    chosen, cover = farthest_point_net(pts[pool_idx], infs[pool_idx],
                                       radius=r, count=count_cap)
    if cover > r:
        raise CoverFailure(
            f"net of {len(chosen)} centers covers the sample only to radius "
            f"{cover:.3g} > {r:.3g}")

    net_bumps = []
    for local in chosen:
        i = int(pool_idx[local])
        center = INFINITY if infs[i] else SpherePoint(complex(pts[i]))
        net_bumps.append(_RawBump(center=center, radius=_SUPPORT_FACTOR * r,
                                  exponent=2))
    if branch:
        def dist_to_branch(bump):
            return min(chordal(bump.center, d.point) for d in branch)

        net_bumps.sort(key=lambda b: (-dist_to_branch(b), b.center.sort_key()))

    sector_bumps = []
    for datum in sorted(branch, key=lambda d: d.point.sort_key()):
        dists = chordal_array(pts, infs, datum.point)
        positive = dists[dists > 1e-12]
        d_plus = float(positive.min()) if positive.size else rho0 / 4
        levels = 1
        while rho0 * 2.0 ** (-(levels - 1)) / 4.0 > d_plus and levels < _SECTOR_LADDER_CAP:
            levels += 1
        e = datum.index
        halfwidth = 0.5 * (2.0 * math.pi / e - _SECTOR_GAP)
        for j in range(levels):
            rho = rho0 * 2.0 ** (-j)
            for k in range(e):
                spec = SectorSpec(axis=2.0 * math.pi * k / e,
                                  halfwidth=halfwidth,
                                  r_inner=rho / 4.0, r_outer=rho)
                sector_bumps.append(_RawBump(center=datum.point, radius=rho,
                                             exponent=2, sector=spec))

    bumps = net_bumps + sector_bumps
    if len(bumps) > count_cap:
        raise CoverFailure(
            f"{len(bumps)} elements exceed the cap {count_cap}; "
            "increase the cap or the net radius")

    partition = PartitionOfUnity(n, bumps)
    total = partition.raw_matrix(pts, infs).sum(axis=0)
    uncovered = np.nonzero(total <= 0.0)[0]
    for i in uncovered:
        p = INFINITY if infs[i] else SpherePoint(complex(pts[i]))
        near_branch = any(chordal(p, d.point) <= 1e-9 for d in branch)
        if not near_branch:
            raise CoverFailure(f"sample point {p!r} is not covered by any bump")

    return [BasisElement(index=i, bump=b, partition=partition)
            for i, b in enumerate(bumps)]


# ----------------------------------------------------------------------
# vanishing functions and reconstruction


@dataclass(frozen=True)
class VanishingFunction:
    """A function certified to vanish near the branch points.

    Carries the support geometry (center and radius of a chordal ball)
    and the recorded positive distance from the support to each branch
    point, so the vanishing-tail index can be determined geometrically.
    """

    fn: TestFunction
    support_center: SpherePoint
    support_radius: float
    branch_points: tuple
    distances: tuple

    @staticmethod
    def bump(rmap: RationalMap, center, radius: float,
             branch_points=None, sample: JuliaSample | None = None) -> "VanishingFunction":
        """A radial bump with certified clearance from the branch points."""
        c = as_point(center)
        if branch_points is None:
            if sample is not None:
                branch_points = [d.point for d in branch_points_on_julia(rmap, sample)]
            else:
                branch_points = [d.point for d in critical_points(rmap)]
        branch_points = tuple(branch_points)
        dists = []
        for bp in branch_points:
            gap = chordal(c, bp) - radius
            if gap <= 0:
                raise ValueError(
                    f"support of the bump meets the branch point {bp!r}")
            dists.append(gap)

        def profile(z):
            d = chordal(as_point(z), c)
            t = d / radius
            return complex(max(1.0 - t * t, 0.0) ** 2)

        fn = TestFunction.from_callable(
            profile, name=f"bump({c!r},{radius})",
            at_infinity=profile(INFINITY))
        return VanishingFunction(fn=fn, support_center=c, support_radius=radius,
                                 branch_points=branch_points, distances=tuple(dists))

    @staticmethod
    def zero(branch_points=()) -> "VanishingFunction":
        fn = TestFunction.constant(0.0, name="0")
        return VanishingFunction(fn=fn, support_center=SpherePoint(0j),
                                 support_radius=0.0,
                                 branch_points=tuple(branch_points), distances=())

    def meets(self, element: BasisElement) -> bool:
        if self.support_radius <= 0.0:
            return False
        gap = chordal(self.support_center, element.center)
        return gap < self.support_radius + element.support_radius


def reconstruct(rmap: RationalMap, basis: list, xi: TestFunction, N: int,
                sample: JuliaSample) -> tuple[TestFunction, float]:
    """Partial reconstruction sum over the first N elements, on the sample.

    Each term is element * (inner product of element with xi, composed
    with the map); the residual is the sup-norm gap to xi over the sample.
    """
    pts, infs = sample.points, sample.inf_mask
    xi_vals = xi.evaluate(pts, infs)
    if N <= 0:
        table = TestFunction.from_table(pts, infs, np.zeros(pts.size, dtype=complex),
                                        name=f"recon0({xi.name})")
        return table, float(np.max(np.abs(xi_vals))) if pts.size else 0.0

    partition = basis[0].partition
    n = rmap.degree

    fiber_pts, fiber_infs, fiber_mult, offsets = [], [], [], [0]
    for i in range(pts.size):
        z = INFINITY if infs[i] else SpherePoint(complex(pts[i]))
        fib = cached_fiber(rmap, evaluate(rmap, z))
        for point, mult in fib.atoms:
            fiber_pts.append(point.value)
            fiber_infs.append(point.infinite)
            fiber_mult.append(mult)
        offsets.append(len(fiber_pts))
    fiber_pts = np.array(fiber_pts, dtype=complex)
    fiber_infs = np.array(fiber_infs, dtype=bool)
    fiber_mult = np.array(fiber_mult, dtype=float)

    U_fiber = partition.member_matrix(fiber_pts, fiber_infs)
    xi_fiber = xi.evaluate(fiber_pts, fiber_infs)
    U_sample = partition.member_matrix(pts, infs)

    recon = np.zeros(pts.size, dtype=complex)
    count = min(N, len(basis))
    for i in range(pts.size):
        lo, hi = offsets[i], offsets[i + 1]
        seg = fiber_mult[lo:hi] * xi_fiber[lo:hi]
        # Bumps are real, so the conjugate in the inner product is a no-op.
        ips = U_fiber[:count, lo:hi] @ seg / n
        recon[i] = U_sample[:count, i] @ ips

    residual = float(np.max(np.abs(recon - xi_vals))) if pts.size else 0.0
    table = TestFunction.from_table(pts, infs, recon, name=f"recon{count}({xi.name})")
    return table, residual
