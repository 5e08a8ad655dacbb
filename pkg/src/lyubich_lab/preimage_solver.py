"""Fibers R^{-1}(w) with multiplicities and iterated-preimage trees.

The tree is the combinatorial backbone of the preimage-counting measures:
level k holds the solutions of the k-fold composition equal to the root,
each carrying the running product of branch indices along its ancestry.
Level sums of those products are exactly degree**k, which is what makes
the downstream measure identities testable bit-exactly.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _fiber
from .errors import BudgetExceeded, ExceptionalRoot
from .rational_map import RationalMap, is_exceptional
from .sphere import INFINITY, SpherePoint, as_point

DEFAULT_BUDGET = 1 << 22


@dataclass(frozen=True)
class WeightedPreimage:
    """The fiber over a target point: distinct atoms with multiplicities."""

    target: SpherePoint
    atoms: tuple

    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.atoms)

    def points(self) -> list[SpherePoint]:
        return [p for p, _ in self.atoms]


def preimages(rmap: RationalMap, w) -> WeightedPreimage:
    """Solve R(z) = w; multiplicities sum exactly to the degree.

    A degree drop at the leading coefficient of P - wQ contributes an atom
    at infinity with the dropped multiplicity.  Raises RootFindingFailure
    if the root finder cannot meet its residual target.
    """
    target = as_point(w)
    atoms = _fiber.solve_fiber(rmap._num_pad, rmap._den_pad, rmap.degree, target)
    return WeightedPreimage(target=target, atoms=tuple(atoms))


@dataclass
class TreeLevel:
    """One level of a preimage tree as parallel arrays."""

    points: np.ndarray           # complex128
    infinite: np.ndarray         # bool
    cum: np.ndarray              # int64 running branch-index products
    parent: np.ndarray           # int64 index into the previous level (-1 at root)

    @property
    def size(self) -> int:
        return self.points.size

    def atom(self, i: int) -> SpherePoint:
        return INFINITY if self.infinite[i] else SpherePoint(complex(self.points[i]))


@dataclass
class PreimageTree:
    """Iterated preimages of a root point down to a fixed depth.

    ``weight_base`` is the denominator base of the level weights: the map
    degree for fully enumerated trees, the branch count for sampled ones.
    Level-k running products sum to ``weight_base**k`` exactly.
    """

    map: RationalMap
    root: SpherePoint
    depth: int
    weight_base: int
    levels: list = field(default_factory=list)

    def level(self, k: int) -> TreeLevel:
        return self.levels[k]

    def atom_count(self, k: int) -> int:
        return self.levels[k].size

    def level_atoms(self, k: int) -> list[tuple[SpherePoint, int]]:
        lvl = self.levels[k]
        return [(lvl.atom(i), int(lvl.cum[i])) for i in range(lvl.size)]

    def to_csv(self, path) -> None:
        """One row per atom: level, re, im, cumulative_mult, parent_index."""
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["level", "re", "im", "cumulative_mult", "parent_index"])
            for k, lvl in enumerate(self.levels):
                for i in range(lvl.size):
                    if lvl.infinite[i]:
                        re, im = "inf", "inf"
                    else:
                        re = repr(float(lvl.points[i].real))
                        im = repr(float(lvl.points[i].imag))
                    writer.writerow([k, re, im, int(lvl.cum[i]), int(lvl.parent[i])])


def _root_level(w: SpherePoint) -> TreeLevel:
    return TreeLevel(
        points=np.array([w.value], dtype=complex),
        infinite=np.array([w.infinite]),
        cum=np.array([1], dtype=np.int64),
        parent=np.array([-1], dtype=np.int64),
    )


def _sorted_level(points, infinite, cum, parent) -> TreeLevel:
    points = np.asarray(points, dtype=complex)
    infinite = np.asarray(infinite, dtype=bool)
    cum = np.asarray(cum, dtype=np.int64)
    parent = np.asarray(parent, dtype=np.int64)
    order = np.lexsort((points.imag, points.real, infinite))
    return TreeLevel(points[order], infinite[order], cum[order], parent[order])


def _check_root(rmap: RationalMap, w: SpherePoint) -> None:
    if is_exceptional(rmap, w):
        raise ExceptionalRoot(
            f"{w!r} has a finite backward orbit; preimage measures are undefined there")


def iterated_preimages(rmap: RationalMap, w, m: int,
                       budget: int = DEFAULT_BUDGET) -> PreimageTree:
    """Fully enumerated preimage tree of depth m rooted at w.

    Raises ExceptionalRoot when w has a finite backward orbit and
    BudgetExceeded when degree**m would exceed the atom budget.
    """
    root = as_point(w)
    if m < 0:
        raise ValueError("depth must be non-negative")
    _check_root(rmap, root)
    if rmap.degree ** m > budget:
        raise BudgetExceeded(
            f"degree**m = {rmap.degree ** m} exceeds the atom budget {budget}")

    tree = PreimageTree(map=rmap, root=root, depth=m, weight_base=rmap.degree,
                        levels=[_root_level(root)])
    for _ in range(m):
        prev = tree.levels[-1]
        pts, infs, cums, pars = [], [], [], []
        for j in range(prev.size):
            fib = preimages(rmap, prev.atom(j))
            parent_cum = int(prev.cum[j])
            for point, mult in fib.atoms:
                pts.append(point.value)
                infs.append(point.infinite)
                cums.append(mult * parent_cum)
                pars.append(j)
        tree.levels.append(_sorted_level(pts, infs, cums, pars))
    return tree


def sampled_tree(rmap: RationalMap, w, m: int, branches_per_node: int,
                 seed: int, budget: int = DEFAULT_BUDGET) -> PreimageTree:
    """Monte Carlo surrogate tree: each node keeps a random subset of children.

    Draws ``branches_per_node`` slots without replacement from the fiber
    multiset (each child occupies branch-index many slots), so the induced
    leaf weights are unbiased for the full-tree weights and
    ``branches_per_node == degree`` reproduces the full tree exactly.
    Deterministic for a given seed.
    """
    root = as_point(w)
    n = rmap.degree
    b = int(branches_per_node)
    if not 1 <= b <= n:
        raise ValueError(f"branches_per_node must be in [1, {n}]")
    if m < 0:
        raise ValueError("depth must be non-negative")
    _check_root(rmap, root)
    if b ** m > budget:
        raise BudgetExceeded(
            f"branches**m = {b ** m} exceeds the atom budget {budget}")

    rng = np.random.default_rng(seed)
    tree = PreimageTree(map=rmap, root=root, depth=m, weight_base=b,
                        levels=[_root_level(root)])
    for _ in range(m):
        prev = tree.levels[-1]
        pts, infs, cums, pars = [], [], [], []
        for j in range(prev.size):
            fib = preimages(rmap, prev.atom(j))
            parent_cum = int(prev.cum[j])
            mults = np.array([mult for _, mult in fib.atoms])
            if b == n:
                counts = mults
            else:
                slots = np.repeat(np.arange(len(fib.atoms)), mults)
                chosen = slots[rng.permutation(n)[:b]]
                counts = np.bincount(chosen, minlength=len(fib.atoms))
            for idx, (point, _) in enumerate(fib.atoms):
                c = int(counts[idx])
                if c == 0:
                    continue
                pts.append(point.value)
                infs.append(point.infinite)
                cums.append(c * parent_cum)
                pars.append(j)
        tree.levels.append(_sorted_level(pts, infs, cums, pars))
    return tree
