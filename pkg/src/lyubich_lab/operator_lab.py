"""Finite operator model on preimage-tree levels, plus the identity harness.

The square-summable space over the balanced measure is modeled by the
tower of weighted atom spaces carried by a preimage tree: level k holds
the depth-k atoms with their exact measure weights.  On that tower the
composition operator is the parent-lookup matrix between adjacent levels,
its weighted adjoint is literally the fiber-averaging transfer operator,
and the identities below hold up to roundoff rather than discretization:

* isometry of the composition operator,
* the covariance relation (adjoint conjugation equals multiplication by
  the transferred symbol),
* the representation relations of the module structure,
* the frame bound and reconstruction sums for a bump basis,
* the vanishing-tail reconstruction for functions that vanish near the
  branch points.

Identities are tested across adjacent levels, which is exactly where the
discrete pushforward identity makes them exact.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bimodule_basis import (JuliaSample, VanishingFunction,
                             branch_points_on_julia, branch_separation_radius,
                             build_basis, julia_sample, net_radius)
from .errors import BudgetExceeded, EigSolverFailure, NoVanishingTail
from .lyubich_measure import (default_root, integrate, measure_from_tree,
                              measure_match_defect, pushforward)
from .preimage_solver import PreimageTree, iterated_preimages
from .rational_map import RationalMap, evaluate
from .sphere import INFINITY, SpherePoint, as_point
from .test_functions import ONE, TestFunction, random_polynomial
from .transfer_operator import apply_transfer, cached_fiber, transfer_power

LEVEL_DIM_CAP = 4096

TOLERANCES = {
    "invariance": 1e-8,
    "isometry": 1e-12,
    "covariance": 1e-10,
    "transfer_unitality": 1e-12,
    "transfer_two_path": 1e-10,
    "representation": 1e-10,
    "key_lemma": 1e-10,
    "frame_bound": 1e-8,
    "vanishing_tail": 1e-2,
}


@dataclass
class LevelSpace:
    """One weighted atom space of the tower."""

    points: np.ndarray
    inf_mask: np.ndarray
    weights: np.ndarray
    parent: np.ndarray

    @property
    def dim(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class LeveledOperator:
    """A dense matrix between (or on) levels of the tower."""

    kind: str
    k_from: int
    k_to: int
    matrix: np.ndarray


@dataclass
class OperatorModel:
    """The tower of weighted atom spaces for one map, root, and depth."""

    map: RationalMap
    root: SpherePoint
    depth: int
    tree: PreimageTree
    levels: list = field(default_factory=list)

    def dim(self, k: int) -> int:
        return self.levels[k].dim

    def dims(self) -> tuple:
        return tuple(lvl.dim for lvl in self.levels)

    def values(self, f: TestFunction, k: int) -> np.ndarray:
        lvl = self.levels[k]
        return f.evaluate(lvl.points, lvl.inf_mask)

    def inner(self, k: int, fv: np.ndarray, gv: np.ndarray) -> complex:
        w = self.levels[k].weights
        terms = fv * np.conj(gv) * w
        return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))

    def composition_matrix(self, k: int) -> np.ndarray:
        """The parent-lookup matrix H_{k-1} -> H_k (rows are one-hot)."""
        lvl = self.levels[k]
        mat = np.zeros((lvl.dim, self.levels[k - 1].dim))
        mat[np.arange(lvl.dim), lvl.parent] = 1.0
        return mat

    def adjoint_matrix(self, k: int) -> np.ndarray:
        """Adjoint of the composition matrix in the weighted inner products.

        Row j averages the children of atom j with weight ratios; on a
        fully enumerated tree this is exactly the fiber-averaging transfer
        operator restricted to the atoms.
        """
        lvl = self.levels[k]
        prev = self.levels[k - 1]
        mat = np.zeros((prev.dim, lvl.dim))
        mat[lvl.parent, np.arange(lvl.dim)] = lvl.weights / prev.weights[lvl.parent]
        return mat

    def composition(self, k: int) -> LeveledOperator:
        return LeveledOperator("composition", k - 1, k, self.composition_matrix(k))

    def adjoint_composition(self, k: int) -> LeveledOperator:
        return LeveledOperator("adjoint-composition", k, k - 1, self.adjoint_matrix(k))

    def multiplication(self, f: TestFunction, k: int) -> LeveledOperator:
        return LeveledOperator("multiplication", k, k,
                               np.diag(self.values(f, k)))

    def apply_adjoint(self, k: int, v: np.ndarray) -> np.ndarray:
        """Adjoint composition applied to a vector, without the dense matrix."""
        lvl = self.levels[k]
        prev = self.levels[k - 1]
        out = np.zeros(prev.dim, dtype=complex)
        np.add.at(out, lvl.parent, v * lvl.weights)
        return out / prev.weights

    def weighted_norm(self, k: int, matrix: np.ndarray) -> float:
        """Operator norm on level k with the weighted inner product."""
        d = np.sqrt(self.levels[k].weights)
        sim = (matrix * (d[:, None] / d[None, :]))
        return float(np.linalg.norm(sim, 2))


def build_model(rmap: RationalMap, w, m: int,
                budget: int | None = None) -> OperatorModel:
    """Populate the tower for a map, non-exceptional root, and depth."""
    kwargs = {} if budget is None else {"budget": budget}
    tree = iterated_preimages(rmap, w, m, **kwargs)
    model = OperatorModel(map=rmap, root=tree.root, depth=m, tree=tree)
    for k in range(m + 1):
        lvl = tree.level(k)
        if lvl.size > LEVEL_DIM_CAP:
            raise BudgetExceeded(
                f"level {k} has {lvl.size} atoms, above the dense cap {LEVEL_DIM_CAP}")
        denom = float(tree.weight_base ** k)
        model.levels.append(LevelSpace(
            points=lvl.points.copy(),
            inf_mask=lvl.infinite.copy(),
            weights=lvl.cum / denom,
            parent=lvl.parent.copy(),
        ))
    return model


# ----------------------------------------------------------------------
# identity checks


def verify_isometry(model: OperatorModel, f: TestFunction, k: int) -> float:
    """| ||Cf||^2 on level k  -  ||f||^2 on level k-1 |."""
    fv = model.values(f, k - 1)
    cf = fv[model.levels[k].parent]
    lhs = model.inner(k, cf, cf).real
    rhs = model.inner(k - 1, fv, fv).real
    return abs(lhs - rhs)


def verify_covariance(model: OperatorModel, a: TestFunction, f: TestFunction,
                      g: TestFunction, k: int) -> float:
    """|<M_a Cf, Cg> on level k - <M_(La) f, g> on level k-1|.

    The right side evaluates the transferred symbol through independent
    fiber solves, not through the tree.
    """
    lvl = model.levels[k]
    prev = model.levels[k - 1]
    av = model.values(a, k)
    fv = model.values(f, k - 1)
    gv = model.values(g, k - 1)
    lhs_terms = av * fv[lvl.parent] * np.conj(gv[lvl.parent]) * lvl.weights
    lhs = complex(math.fsum(lhs_terms.real.tolist()),
                  math.fsum(lhs_terms.imag.tolist()))
    la = np.array([apply_transfer(model.map, a,
                                  INFINITY if prev.inf_mask[j]
                                  else SpherePoint(complex(prev.points[j])))
                   for j in range(prev.dim)])
    rhs_terms = la * fv * np.conj(gv) * prev.weights
    rhs = complex(math.fsum(rhs_terms.real.tolist()),
                  math.fsum(rhs_terms.imag.tolist()))
    return abs(lhs - rhs)


def verify_representation(model: OperatorModel, xi: TestFunction,
                          eta: TestFunction, a: TestFunction,
                          k: int) -> tuple[float, float]:
    """Residuals of the two representation relations.

    First: multiplication before or after the symbol map agrees exactly
    as matrices (asserted zero by construction).  Second: the operator
    norm gap between the composed pairing and multiplication by the
    module inner product on level k-1.
    """
    from .transfer_operator import inner_product

    comp = model.composition_matrix(k)
    av = model.values(a, k)
    xv = model.values(xi, k)
    # Multiplication operators are diagonal scalings; apply them as row
    # scalings so both sides take the identical floating-point path.
    v_xi = xv[:, None] * comp
    lhs = av[:, None] * v_xi
    rhs = (av * xv)[:, None] * comp
    residual1 = float(np.max(np.abs(lhs - rhs)))

    ev = model.values(eta, k)
    adj = model.adjoint_matrix(k)
    pairing = adj @ ((np.conj(xv) * ev)[:, None] * comp)
    ip = inner_product(model.map, xi, eta)
    prev = model.levels[k - 1]
    ip_vals = ip.evaluate(prev.points, prev.inf_mask)
    residual2 = model.weighted_norm(k - 1, pairing - np.diag(ip_vals))
    return residual1, residual2


def _basis_matrix(basis: list, points: np.ndarray, inf_mask: np.ndarray) -> np.ndarray:
    if not basis:
        return np.zeros((0, points.size))
    return basis[0].partition.member_matrix(points, inf_mask)


def verify_key_lemma(model: OperatorModel, basis: list, N: int,
                     a: TestFunction, k: int) -> float:
    """Two evaluations of the same reconstruction sum must agree pointwise.

    Path one composes the model matrices; path two evaluates each element
    against independently root-found fibers of the mapped atoms.
    """
    lvl = model.levels[k]
    av = model.values(a, k)
    U = _basis_matrix(basis, lvl.points, lvl.inf_mask)
    count = min(N, len(basis))

    path_a = np.zeros(lvl.dim, dtype=complex)
    for i in range(count):
        u = U[i]
        t = u * av                       # bumps are real-valued
        s = model.apply_adjoint(k, t)
        path_a += u * s[lvl.parent]

    n = model.map.degree
    fiber_pts, fiber_infs, fiber_mult, offsets = [], [], [], [0]
    for j in range(lvl.dim):
        z = INFINITY if lvl.inf_mask[j] else SpherePoint(complex(lvl.points[j]))
        fib = cached_fiber(model.map, evaluate(model.map, z))
        for point, mult in fib.atoms:
            fiber_pts.append(point.value)
            fiber_infs.append(point.infinite)
            fiber_mult.append(mult)
        offsets.append(len(fiber_pts))
    fiber_pts = np.array(fiber_pts, dtype=complex)
    fiber_infs = np.array(fiber_infs, dtype=bool)
    fiber_mult = np.array(fiber_mult, dtype=float)
    U_fiber = _basis_matrix(basis, fiber_pts, fiber_infs)
    a_fiber = a.evaluate(fiber_pts, fiber_infs)

    path_b = np.zeros(lvl.dim, dtype=complex)
    for j in range(lvl.dim):
        lo, hi = offsets[j], offsets[j + 1]
        seg = fiber_mult[lo:hi] * a_fiber[lo:hi]
        ips = U_fiber[:count, lo:hi] @ seg / n
        path_b[j] = U[:count, j] @ ips

    return float(np.max(np.abs(path_a - path_b))) if lvl.dim else 0.0


def _frame_matrix(model: OperatorModel, basis: list, N: int, k: int) -> np.ndarray:
    lvl = model.levels[k]
    comp = model.composition_matrix(k)
    proj = comp @ model.adjoint_matrix(k)
    U = _basis_matrix(basis, lvl.points, lvl.inf_mask)
    total = np.zeros((lvl.dim, lvl.dim), dtype=complex)
    for i in range(min(N, len(basis))):
        u = U[i]
        total += u[:, None] * proj * u[None, :]
    return total


def _weighted_eigvals(model: OperatorModel, k: int, matrix: np.ndarray) -> np.ndarray:
    d = np.sqrt(model.levels[k].weights)
    sim = matrix * (d[:, None] / d[None, :])
    herm = 0.5 * (sim + sim.conj().T)
    try:
        return np.linalg.eigvalsh(herm)
    except np.linalg.LinAlgError as exc:
        raise EigSolverFailure("dense Hermitian eigensolve failed") from exc


def verify_frame_bound(model: OperatorModel, basis: list, N: int, k: int,
                       full: bool = False):
    """Largest eigenvalue of the partial frame sum on level k.

    The sum of element-conjugated projections is positive and bounded by
    the identity; eigenvalues are monotone non-decreasing in N.  With
    ``full=True`` returns (min_eigenvalue, max_eigenvalue).
    """
    if min(N, len(basis)) == 0:
        return (0.0, 0.0) if full else 0.0
    eigs = _weighted_eigvals(model, k, _frame_matrix(model, basis, N, k))
    if full:
        return float(eigs[0]), float(eigs[-1])
    return float(eigs[-1])


def verify_vanishing_reconstruction(model: OperatorModel, basis: list,
                                    a: VanishingFunction, k: int) -> tuple[int, float]:
    """Smallest index M past which a meets no element, and the norm gap
    between the a-weighted partial frame sum at M and multiplication by a.

    Raises NoVanishingTail when a meets every element.
    """
    meets = [a.meets(el) for el in basis]
    if basis and all(meets):
        raise NoVanishingTail(
            f"{a.fn.name} meets all {len(basis)} elements")
    M = 0
    for i, m in enumerate(meets):
        if m:
            M = i + 1
    lvl = model.levels[k]
    av = model.values(a.fn, k)
    frame = _frame_matrix(model, basis, M, k)
    gap = np.diag(av) @ (frame - np.eye(lvl.dim))
    return M, model.weighted_norm(k, gap)


# ----------------------------------------------------------------------
# the verification suite


def _record(identity: str, rmap: RationalMap, w: SpherePoint, m: int, k: int,
            residual: float, N: int | None = None, extra_pass: bool = True) -> dict:
    tol = TOLERANCES[identity]
    rec = {
        "identity": identity,
        "map": rmap.name or repr(rmap),
        "w": "inf" if w.infinite else [w.value.real, w.value.imag],
        "m": m,
        "k": k,
        "residual": residual,
        "tolerance": tol,
        "pass": bool(residual <= tol) and extra_pass,
    }
    if N is not None:
        rec["N"] = N
    return rec


def default_basis(rmap: RationalMap, sample: JuliaSample,
                  count: int = 32, count_cap: int = 256) -> list:
    """Basis sized for the suite: a net of about ``count`` bumps whose
    supports respect the separation radius."""
    r_sep = branch_separation_radius(rmap, sample)
    r = min(net_radius(sample, count) * 1.000001, r_sep / 3.0)
    return build_basis(rmap, sample, r, count_cap=count_cap)


def verification_suite(rmap: RationalMap, w=None, m: int = 8, seed: int = 0,
                       trials: int = 100, pairs: int = 50,
                       basis_count: int = 32, sample_size: int = 384,
                       unitality_points: int = 1000,
                       identities=None) -> dict:
    """Run every identity check for one map and return the JSON report.

    Deterministic for a given seed.  ``identities`` may restrict to a
    subset of the record names.
    """
    w = default_root(rmap) if w is None else as_point(w)
    wanted = None if identities is None else set(identities)

    def want(name):
        return wanted is None or name in wanted

    rng = np.random.default_rng(seed)
    model = build_model(rmap, w, m)
    k = m
    records = []

    if want("invariance"):
        worst = 0.0
        exact = True
        mu = measure_from_tree(model.tree, model.depth)
        for level in range(model.depth, 0, -1):
            pushed = pushforward(mu, rmap)
            target = measure_from_tree(model.tree, level - 1)
            defect, ok = measure_match_defect(pushed, target)
            worst = max(worst, defect)
            exact = exact and ok
            mu = target
        records.append(_record("invariance", rmap, w, m, k, worst,
                               extra_pass=exact))

    if want("isometry"):
        worst = max(verify_isometry(model, random_polynomial(rng, 2), k)
                    for _ in range(trials))
        records.append(_record("isometry", rmap, w, m, k, worst))

    if want("covariance"):
        worst = 0.0
        for _ in range(trials):
            a = random_polynomial(rng, 2)
            f = random_polynomial(rng, 2)
            g = random_polynomial(rng, 2)
            worst = max(worst, verify_covariance(model, a, f, g, k))
        records.append(_record("covariance", rmap, w, m, k, worst))

    if want("transfer_unitality"):
        sample = julia_sample(rmap, unitality_points, seed)
        worst = 0.0
        for i in range(sample.size):
            p = INFINITY if sample.inf_mask[i] else SpherePoint(complex(sample.points[i]))
            worst = max(worst, abs(apply_transfer(rmap, ONE, p) - 1.0))
        records.append(_record("transfer_unitality", rmap, w, m, k, worst))

    if want("transfer_two_path"):
        a = random_polynomial(rng, 2)
        worst = 0.0
        for power in (0, 1, 2, 3, 5, 8, min(m, 10)):
            tree = iterated_preimages(rmap, w, power)
            via_power = transfer_power(rmap, a, power, w)
            via_tree = integrate(measure_from_tree(tree), a)
            worst = max(worst, abs(via_power - via_tree))
        records.append(_record("transfer_two_path", rmap, w, m, k, worst))

    sample = julia_sample(rmap, sample_size, seed)
    basis = default_basis(rmap, sample, count=basis_count)

    if want("representation"):
        worst = 0.0
        exact = True
        for _ in range(pairs):
            xi = random_polynomial(rng, 2)
            eta = random_polynomial(rng, 2)
            a = random_polynomial(rng, 1)
            r1, r2 = verify_representation(model, xi, eta, a, k)
            exact = exact and (r1 == 0.0)
            worst = max(worst, r2)
        records.append(_record("representation", rmap, w, m, k, worst,
                               extra_pass=exact))

    if want("key_lemma"):
        worst = 0.0
        for N in (0, max(1, len(basis) // 2), len(basis)):
            a = random_polynomial(rng, 2)
            worst = max(worst, verify_key_lemma(model, basis, N, a, k))
        records.append(_record("key_lemma", rmap, w, m, k, worst,
                               N=len(basis)))

    if want("frame_bound"):
        worst_high = 0.0
        worst_low = 0.0
        monotone = True
        previous = 0.0
        for N in range(1, len(basis) + 1):
            low, high = verify_frame_bound(model, basis, N, k, full=True)
            worst_high = max(worst_high, high - 1.0)
            worst_low = max(worst_low, -low)
            if high < previous - 1e-10:
                monotone = False
            previous = high
        residual = max(worst_high, 0.0)
        ok = monotone and worst_low <= 1e-10
        records.append(_record("frame_bound", rmap, w, m, k, residual,
                               N=len(basis), extra_pass=ok))

    if want("vanishing_tail"):
        branch = [d.point for d in branch_points_on_julia(rmap, sample)]
        if branch:
            dists = np.full(sample.size, np.inf)
            for bp in branch:
                from .sphere import chordal_array
                dists = np.minimum(dists, chordal_array(sample.points,
                                                        sample.inf_mask, bp))
            center_idx = int(np.argmax(dists))
            center = (INFINITY if sample.inf_mask[center_idx]
                      else SpherePoint(complex(sample.points[center_idx])))
            radius = min(0.45 * float(dists[center_idx]), 0.5)
        else:
            center = (INFINITY if sample.inf_mask[0]
                      else SpherePoint(complex(sample.points[0])))
            radius = 0.5
        vf = VanishingFunction.bump(rmap, center, radius, branch_points=branch)
        M, residual = verify_vanishing_reconstruction(model, basis, vf, k)
        records.append(_record("vanishing_tail", rmap, w, m, k, residual, N=M))

    return {
        "config": {
            "map": rmap.describe(),
            "w": "inf" if w.infinite else [w.value.real, w.value.imag],
            "m": m,
            "seed": seed,
            "trials": trials,
            "pairs": pairs,
            "basis_count": basis_count,
            "sample_size": sample_size,
        },
        "results": records,
        "all_pass": all(r["pass"] for r in records),
    }
