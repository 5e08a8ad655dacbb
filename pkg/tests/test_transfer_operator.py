import numpy as np
import pytest

from lyubich_lab.lyubich_measure import integrate, measure_from_tree
from lyubich_lab.preimage_solver import iterated_preimages
from lyubich_lab.rational_map import RationalMap, builtin_map
from lyubich_lab.transfer_operator import (apply_transfer, inner_product,
                                           sup_norm_2, transfer_power,
                                           transfer_result)
from lyubich_lab import test_functions as tf


@pytest.fixture(scope="module")
def quad_map():
    return builtin_map("quad")


@pytest.fixture(scope="module")
def cheb():
    return builtin_map("chebyshev")


def _brute_force_transfer(rmap, a, w):
    """Independent fiber enumeration through the companion-matrix solver."""
    coeffs = (rmap._num_pad - complex(w) * rmap._den_pad)
    roots = np.roots(coeffs[::-1])
    # simple fibers only (used at generic points)
    return sum(a(z) for z in roots) / rmap.degree


def test_unitality(quad_map, cheb):
    rng = np.random.default_rng(21)
    for rmap in (quad_map, cheb):
        for _ in range(50):
            w = complex(rng.normal(scale=2), rng.normal(scale=2))
            assert abs(apply_transfer(rmap, tf.ONE, w) - 1.0) < 1e-12


def test_transfer_of_z_cancels(quad_map):
    assert abs(apply_transfer(quad_map, tf.Z, 0.3 + 0.7j)) < 1e-12


def test_transfer_abs2_is_abs_w(quad_map):
    rng = np.random.default_rng(22)
    for _ in range(20):
        w = complex(rng.normal(), rng.normal())
        got = apply_transfer(quad_map, tf.ABS2, w)
        assert got.real == pytest.approx(abs(w), rel=1e-10)
        assert abs(got.imag) < 1e-12
        brute = _brute_force_transfer(quad_map, tf.ABS2, w)
        assert abs(got - brute) < 1e-8


def test_positivity_on_fiber(cheb):
    rng = np.random.default_rng(23)
    for _ in range(20):
        w = complex(rng.normal(), rng.normal())
        value = apply_transfer(cheb, tf.ABS2, w)
        assert value.real >= -1e-14


def test_module_property(quad_map, cheb):
    rng = np.random.default_rng(24)
    for rmap in (quad_map, cheb):
        a = tf.random_polynomial(rng, 2)
        b = tf.random_polynomial(rng, 2)
        lifted = b.compose_with(rmap) * a
        for w in (0.4 + 0.3j, -1.2 + 0j, 0.9j):
            lhs = apply_transfer(rmap, lifted, w)
            rhs = b(w) * apply_transfer(rmap, a, w)
            assert abs(lhs - rhs) < 1e-10


def test_power_zero_identity(cheb):
    a = tf.RE2
    assert transfer_power(cheb, a, 0, 1.5) == a(1.5)


def test_power_of_one_stays_one(quad_map):
    assert abs(transfer_power(quad_map, tf.ONE, 5, 0.77) - 1.0) < 1e-12


@pytest.mark.parametrize("name,w", [("quad", 1.0), ("basilica", 0.25),
                                    ("chebyshev", 2.0)])
def test_two_path_equality(name, w):
    rmap = builtin_map(name)
    rng = np.random.default_rng(25)
    a = tf.random_polynomial(rng, 2)
    for m in (0, 1, 2, 4, 7, 10):
        tree = iterated_preimages(rmap, w, m)
        via_power = transfer_power(rmap, a, m, w)
        via_tree = integrate(measure_from_tree(tree), a)
        assert abs(via_power - via_tree) < 1e-10


def test_inner_product_identity_element(quad_map):
    ip = inner_product(quad_map, tf.ONE, tf.ONE)
    for w in (0.2, 1 + 1j, -0.7j):
        assert abs(ip(w) - 1.0) < 1e-12


def test_inner_product_zz_gives_modulus(quad_map):
    ip = inner_product(quad_map, tf.Z, tf.Z)
    for w in (0.5 + 0.1j, 2.0 + 0j, -1.3j):
        assert ip(w).real == pytest.approx(abs(w), rel=1e-10)


def test_inner_product_conjugate_symmetry(cheb):
    rng = np.random.default_rng(26)
    xi = tf.random_polynomial(rng, 2)
    eta = tf.random_polynomial(rng, 2)
    fwd = inner_product(cheb, xi, eta)
    bwd = inner_product(cheb, eta, xi)
    for _ in range(20):
        w = complex(rng.normal(), rng.normal())
        assert abs(fwd(w) - bwd(w).conjugate()) < 1e-12


def test_sup_norm_basics(quad_map):
    circle = [np.exp(2j * np.pi * t) for t in np.linspace(0, 1, 17)]
    assert sup_norm_2(quad_map, tf.ONE, circle) == pytest.approx(1.0, abs=1e-12)
    assert sup_norm_2(quad_map, tf.Z, circle) == pytest.approx(1.0, rel=1e-8)


def test_sup_norm_monotone_under_refinement(quad_map):
    coarse = [np.exp(2j * np.pi * t) for t in np.linspace(0, 1, 5)]
    fine = coarse + [1.3 * np.exp(2j * np.pi * t) for t in np.linspace(0, 1, 9)]
    a = sup_norm_2(quad_map, tf.Z, coarse)
    b = sup_norm_2(quad_map, tf.Z, fine)
    assert b >= a


def test_cache_returns_identical_results(cheb):
    a = tf.random_polynomial(np.random.default_rng(27), 2)
    first = apply_transfer(cheb, a, 0.123 + 0.456j)
    second = apply_transfer(cheb, a, 0.123 + 0.456j)
    assert first == second


def test_concurrent_evaluation_matches_serial(cheb):
    from concurrent.futures import ThreadPoolExecutor

    rng = np.random.default_rng(30)
    a = tf.random_polynomial(rng, 2)
    points = [complex(rng.normal(), rng.normal()) for _ in range(200)]
    serial = [apply_transfer(cheb, a, w) for w in points]
    with ThreadPoolExecutor(max_workers=8) as pool:
        threaded = list(pool.map(lambda w: apply_transfer(cheb, a, w), points))
    assert serial == threaded


# ----------------------------------------------------------------------
# packaged transfer results


def test_transfer_result_table_satisfies_formula(cheb):
    rng = np.random.default_rng(28)
    a = tf.random_polynomial(rng, 2)
    pts = rng.normal(size=12) + 1j * rng.normal(size=12)
    res = transfer_result(cheb, a, points=pts)
    inf = np.zeros(12, dtype=bool)
    table_vals = res.table.evaluate(pts, inf)
    for i, w in enumerate(pts):
        assert abs(table_vals[i] - apply_transfer(cheb, a, w)) < 1e-10


def test_transfer_result_closed_form_polynomial_map(quad_map, cheb):
    rng = np.random.default_rng(29)
    cubic_symbol = tf.TestFunction.polynomial({(3, 0): 1.0, (0, 2): 2j,
                                               (0, 0): -1.0})
    for rmap in (quad_map, cheb):
        for a in (tf.ONE, tf.Z, tf.Z * tf.Z, tf.ZBAR, cubic_symbol):
            res = transfer_result(rmap, a)
            assert res.closed_form is not None
            for _ in range(15):
                w = complex(rng.normal(scale=2), rng.normal(scale=2))
                assert abs(res.closed_form(w)
                           - apply_transfer(rmap, a, w)) < 1e-10


def test_transfer_result_no_closed_form_cases(quad_map):
    mixed = tf.TestFunction.polynomial({(1, 1): 1.0})
    assert transfer_result(quad_map, mixed).closed_form is None
    ratl = RationalMap([-1, 0, 1], [1, 0, 1])
    assert transfer_result(ratl, tf.Z).closed_form is None
