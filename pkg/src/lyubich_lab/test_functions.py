"""Closed-form evaluable functions on the sphere.

These play the role of the continuous / square-integrable functions fed to
quadrature and to the operator model: bivariate polynomials in (z, conj z),
named analytic forms wrapped as callables, and pointwise tables bound to a
specific atom set.  Polynomials compose exactly under products and
conjugation, which keeps the operator identities free of interpolation
error.
"""

import numpy as np

from .errors import IncompatibleTable
from .sphere import SpherePoint, as_point


class TestFunction:
    """An evaluable function on the sphere.

    Construct through the classmethods: :meth:`polynomial` for a
    coefficient table ``{(j, k): c}`` meaning ``sum c * z**j * conj(z)**k``,
    :meth:`from_callable` for closures, :meth:`from_table` for values bound
    to a fixed atom set.
    """

    __slots__ = ("kind", "name", "_coeffs", "_fn", "_at_inf", "_points", "_inf_mask", "_values")

    def __init__(self, kind, name, coeffs=None, fn=None, at_inf=None,
                 points=None, inf_mask=None, values=None):
        self.kind = kind
        self.name = name
        self._coeffs = coeffs
        self._fn = fn
        self._at_inf = at_inf
        self._points = points
        self._inf_mask = inf_mask
        self._values = values

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def polynomial(cls, coeffs: dict, name: str | None = None) -> "TestFunction":
        clean = {}
        for (j, k), c in coeffs.items():
            c = complex(c)
            if c != 0:
                clean[(int(j), int(k))] = c
        if name is None:
            name = _poly_name(clean)
        return cls("poly", name, coeffs=clean)

    @classmethod
    def constant(cls, c, name: str | None = None) -> "TestFunction":
        return cls.polynomial({(0, 0): c}, name=name or str(c))

    @classmethod
    def from_callable(cls, fn, name: str, at_infinity=None) -> "TestFunction":
        return cls("callable", name, fn=fn, at_inf=at_infinity)

    @classmethod
    def from_table(cls, points, inf_mask, values, name: str = "table") -> "TestFunction":
        points = np.asarray(points, dtype=complex)
        inf_mask = np.asarray(inf_mask, dtype=bool)
        values = np.asarray(values, dtype=complex)
        return cls("table", name, points=points, inf_mask=inf_mask, values=values)

    # ------------------------------------------------------------------
    # evaluation

    def __call__(self, z) -> complex:
        p = as_point(z)
        if self.kind == "poly":
            if p.infinite:
                return self._poly_at_infinity()
            return self._poly_scalar(p.value)
        if self.kind == "callable":
            if p.infinite:
                if self._at_inf is None:
                    raise ValueError(f"{self.name} is not defined at infinity")
                return complex(self._at_inf)
            return complex(self._fn(p.value))
        # table
        if p.infinite:
            hits = np.nonzero(self._inf_mask)[0]
        else:
            hits = np.nonzero((self._points == p.value) & ~self._inf_mask)[0]
        if hits.size == 0:
            raise IncompatibleTable(f"point {p!r} is not an atom of table {self.name}")
        return complex(self._values[hits[0]])

    def evaluate(self, points, inf_mask=None) -> np.ndarray:
        """Vectorized evaluation on a complex array with an infinity mask."""
        points = np.asarray(points, dtype=complex)
        if inf_mask is None:
            inf_mask = np.zeros(points.shape, dtype=bool)
        inf_mask = np.asarray(inf_mask, dtype=bool)
        if self.kind == "poly":
            out = np.zeros(points.shape, dtype=complex)
            zbar = np.conj(points)
            for (j, k), c in self._coeffs.items():
                out += c * points**j * zbar**k
            if inf_mask.any():
                out[inf_mask] = self._poly_at_infinity()
            return out
        if self.kind == "callable":
            out = np.empty(points.shape, dtype=complex)
            flat = out.reshape(-1)
            pflat = points.reshape(-1)
            iflat = inf_mask.reshape(-1)
            for i in range(pflat.size):
                if iflat[i]:
                    if self._at_inf is None:
                        raise ValueError(f"{self.name} is not defined at infinity")
                    flat[i] = complex(self._at_inf)
                else:
                    flat[i] = complex(self._fn(pflat[i]))
            return out
        # table: atoms must match the binding exactly
        if (points.shape != self._points.shape
                or not np.array_equal(inf_mask, self._inf_mask)
                or not np.array_equal(points, self._points)):
            raise IncompatibleTable(
                f"table {self.name} is bound to a different atom set")
        return self._values.copy()

    def _poly_scalar(self, z: complex) -> complex:
        zbar = z.conjugate()
        return sum(c * z**j * zbar**k for (j, k), c in self._coeffs.items())

    def _poly_at_infinity(self) -> complex:
        nonconst = [jk for jk in self._coeffs if jk != (0, 0)]
        if nonconst:
            raise ValueError(f"polynomial {self.name} is not defined at infinity")
        return self._coeffs.get((0, 0), 0j)

    # ------------------------------------------------------------------
    # algebra

    def conj(self) -> "TestFunction":
        if self.kind == "poly":
            flipped = {(k, j): c.conjugate() for (j, k), c in self._coeffs.items()}
            return TestFunction.polynomial(flipped, name=f"conj({self.name})")
        if self.kind == "callable":
            fn = self._fn
            at_inf = None if self._at_inf is None else complex(self._at_inf).conjugate()
            return TestFunction.from_callable(
                lambda z: complex(fn(z)).conjugate(), f"conj({self.name})", at_inf)
        return TestFunction.from_table(
            self._points, self._inf_mask, np.conj(self._values), f"conj({self.name})")

    def __mul__(self, other) -> "TestFunction":
        if np.isscalar(other) and not isinstance(other, TestFunction):
            return self._scale(complex(other))
        if not isinstance(other, TestFunction):
            return NotImplemented
        if self.kind == "poly" and other.kind == "poly":
            prod = {}
            for (j1, k1), c1 in self._coeffs.items():
                for (j2, k2), c2 in other._coeffs.items():
                    key = (j1 + j2, k1 + k2)
                    prod[key] = prod.get(key, 0j) + c1 * c2
            return TestFunction.polynomial(prod, name=f"({self.name})*({other.name})")
        a, b = self, other
        return TestFunction.from_callable(
            lambda z: a(z) * b(z), f"({a.name})*({b.name})",
            at_infinity=_inf_product(a, b))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __add__(self, other) -> "TestFunction":
        if np.isscalar(other) and not isinstance(other, TestFunction):
            other = TestFunction.constant(complex(other))
        if not isinstance(other, TestFunction):
            return NotImplemented
        if self.kind == "poly" and other.kind == "poly":
            total = dict(self._coeffs)
            for key, c in other._coeffs.items():
                total[key] = total.get(key, 0j) + c
            return TestFunction.polynomial(total, name=f"({self.name})+({other.name})")
        a, b = self, other
        at_inf = None
        try:
            at_inf = a(SpherePoint.infinity()) + b(SpherePoint.infinity())
        except (ValueError, IncompatibleTable):
            at_inf = None
        return TestFunction.from_callable(
            lambda z: a(z) + b(z), f"({a.name})+({b.name})", at_infinity=at_inf)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other) and not isinstance(other, TestFunction):
            other = TestFunction.constant(complex(other))
        return self + (-1.0) * other

    def _scale(self, c: complex) -> "TestFunction":
        if self.kind == "poly":
            return TestFunction.polynomial(
                {jk: c * v for jk, v in self._coeffs.items()},
                name=f"{c}*({self.name})")
        if self.kind == "callable":
            fn = self._fn
            at_inf = None if self._at_inf is None else c * complex(self._at_inf)
            return TestFunction.from_callable(
                lambda z: c * fn(z), f"{c}*({self.name})", at_inf)
        return TestFunction.from_table(
            self._points, self._inf_mask, c * self._values, f"{c}*({self.name})")

    def compose_with(self, rational_map) -> "TestFunction":
        """The function z -> f(R(z)); composition is exact, no interpolation."""
        from .rational_map import evaluate

        base = self

        def composed(z):
            return base(evaluate(rational_map, as_point(z)))

        return TestFunction.from_callable(
            composed, f"({self.name}) o R", at_infinity=None)

    def __repr__(self):
        return f"TestFunction<{self.kind}:{self.name}>"


def _poly_name(coeffs: dict) -> str:
    if not coeffs:
        return "0"
    parts = []
    for (j, k) in sorted(coeffs):
        term = ""
        if j:
            term += f"z^{j}" if j > 1 else "z"
        if k:
            term += f"zb^{k}" if k > 1 else "zb"
        parts.append(term or "1")
    return "+".join(parts)


def _inf_product(a: TestFunction, b: TestFunction):
    try:
        return a(SpherePoint.infinity()) * b(SpherePoint.infinity())
    except (ValueError, IncompatibleTable):
        return None


ONE = TestFunction.constant(1.0, name="1")

Z = TestFunction.polynomial({(1, 0): 1.0}, name="z")
ZBAR = TestFunction.polynomial({(0, 1): 1.0}, name="zb")
RE = TestFunction.polynomial({(1, 0): 0.5, (0, 1): 0.5}, name="re(z)")
IM = TestFunction.polynomial({(1, 0): -0.5j, (0, 1): 0.5j}, name="im(z)")
ABS2 = TestFunction.polynomial({(1, 1): 1.0}, name="|z|^2")
RE2 = RE * RE
RE4 = RE2 * RE2


def abs_distance(center: complex, name: str | None = None) -> TestFunction:
    """The Lipschitz function z -> |z - center|."""
    c = complex(center)
    return TestFunction.from_callable(
        lambda z: abs(z - c), name or f"|z-({c})|", at_infinity=None)


ABS = TestFunction.from_callable(lambda z: abs(z), "|z|", at_infinity=None)


def random_polynomial(rng: np.random.Generator, max_degree: int = 2,
                      decay: float = 3.0, name: str = "rand") -> TestFunction:
    """A random polynomial in (z, conj z) with geometrically damped coefficients.

    The damping keeps values O(1) on the disk |z| <= 2 so that residual
    tolerances in the operator checks are meaningful.
    """
    coeffs = {}
    for j in range(max_degree + 1):
        for k in range(max_degree + 1 - j):
            c = complex(rng.standard_normal(), rng.standard_normal())
            coeffs[(j, k)] = c * decay ** (-(j + k))
    return TestFunction.polynomial(coeffs, name=name)
