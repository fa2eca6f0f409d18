import math

import mpmath
import numpy as np
import pytest

from twostate_fp.fem import ScalarField
from twostate_fp.oracle import (
    ContourParams,
    default_contour,
    mittag_leffler,
    modal_solution,
    oracle_solution,
    sine_coefficients,
)
from twostate_fp.problems import SIN1, X1, example2, get_problem

LAM1 = math.pi**2


def test_sine_coefficients_of_first_mode():
    c = sine_coefficients(ScalarField(lambda x: math.sqrt(2) * np.sin(np.pi * x)), 6)
    np.testing.assert_allclose(c, [1, 0, 0, 0, 0, 0], atol=1e-14)


def test_sine_coefficients_quadratic():
    j = np.arange(1, 41)
    ref = math.sqrt(2) * 2 * (1 - (-1.0) ** j) / (j * np.pi) ** 3
    np.testing.assert_allclose(sine_coefficients(X1, 40), ref, atol=1e-14)


def test_sine_coefficients_characteristic():
    chi = ScalarField(lambda x: ((x > 0) & (x < 0.25)).astype(float), breaks=(0.25,))
    j = np.arange(1, 201)
    ref = math.sqrt(2) * (1 - np.cos(j * np.pi / 4)) / (j * np.pi)
    np.testing.assert_allclose(sine_coefficients(chi, 200), ref, atol=1e-13)


def test_sine_coefficients_rejects_empty():
    with pytest.raises(ValueError):
        sine_coefficients(X1, 0)


@pytest.mark.parametrize("alpha,t", [(0.4, 0.01), (0.7, 0.1), (0.25, 0.001)])
def test_uncoupled_mode_is_mittag_leffler(alpha, t):
    u1, u2 = modal_solution(LAM1, alpha, 0.6, 0.0, 1.0, 0.0, t)
    assert u1 == pytest.approx(mittag_leffler(alpha, -LAM1 * t**alpha), abs=1e-8)
    assert u2 == 0.0


def test_heat_mode():
    u1, _ = modal_solution(LAM1, 1.0, 1.0, 0.0, 1.0, 0.0, 0.05)
    assert u1 == pytest.approx(math.exp(-LAM1 * 0.05), abs=1e-10)


def test_small_time_limit():
    # the approach to the initial value is O(t^alpha1), so 1e-4 closeness needs t ~ 1e-14
    u1, u2 = modal_solution(LAM1, 0.4, 0.6, 1.0, 0.8, 0.3, 1e-14)
    assert u1 == pytest.approx(0.8, abs=1e-4) and u2 == pytest.approx(0.3, abs=1e-4)
    dev = [0.8 - modal_solution(LAM1, 0.4, 0.6, 1.0, 0.8, 0.3, t)[0] for t in (1e-10, 1e-12)]
    assert math.log10(dev[0] / dev[1]) / 2 == pytest.approx(0.4, abs=0.01)


def test_coupled_mode_against_mpmath_laplace_inversion():
    alpha1, alpha2, a, lam, t = 0.4, 0.6, 1.0, LAM1, 0.01

    def F(z):
        p1 = z**alpha1 + a + lam
        p2 = z**alpha2 + a + lam
        return z ** (alpha1 - 1) / (p1 - a * a / p2)

    ref = float(mpmath.invertlaplace(F, t, method="talbot"))
    u1, _ = modal_solution(lam, alpha1, alpha2, a, 1.0, 0.0, t)
    assert u1 == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("scale,theta,nq", [(1.5, 3 * math.pi / 4, 300), (1.0, 0.65 * math.pi, 300), (2.0, 0.8 * math.pi, 400)])
def test_contour_independence(scale, theta, nq):
    lam = (np.arange(1, 41) * np.pi) ** 2
    c1, c2 = np.ones(40) / np.arange(1, 41), np.ones(40) / np.arange(1, 41) ** 2
    base = modal_solution(lam, 0.4, 0.6, 1.0, c1, c2, 0.01)
    other = modal_solution(lam, 0.4, 0.6, 1.0, c1, c2, 0.01, default_contour(0.4, 0.6, 1.0, 0.01, theta, scale, nq))
    for u, v in zip(base, other):
        assert np.max(np.abs(u - v)) < 1e-9


def test_contour_checks():
    good = default_contour(0.4, 0.6, 1.0, 0.01)
    good.check(0.4, 0.6, 1.0, 0.01)
    for bad in (
        ContourParams(math.pi / 3, good.kappa, 300, good.r_max),
        ContourParams(good.theta, 0.5 / 0.01, 300, good.r_max),
        ContourParams(good.theta, good.kappa, 300, good.kappa * 1.01),
    ):
        with pytest.raises(ValueError):
            bad.check(0.4, 0.6, 1.0, 0.01)
    with pytest.raises(ValueError):
        # kappa must clear the coupling singularities
        ContourParams(good.theta, 100.0, 300, 1e5).check(0.4, 0.6, 10.0, 0.01)
    with pytest.raises(ValueError):
        modal_solution(LAM1, 0.4, 0.6, 1.0, 1.0, 0.0, 0.0)


def test_uncoupled_product_form():
    p = get_problem("example2", a=0.0)
    sol = oracle_solution(p, 50, 0.01)
    # sin(pi x) is the first mode only: G2 = E_alpha2(-pi^2 t^alpha2) sin(pi x)
    ml = mittag_leffler(p.alpha2, -LAM1 * 0.01**p.alpha2)
    x = np.linspace(0, 1, 9)
    np.testing.assert_allclose(sol.g2(x), ml * np.sin(np.pi * x), atol=1e-9)


# example2 at t = 0.01, modes 1, 3, 5; frozen after agreeing to 1e-15 with
# K = 400 on a different contour (theta = 0.7 pi, kappa x 1.3, 600 nodes)
EXAMPLE2_FIXTURE = {
    "c1": [-7.8511687642122818e-01, 4.1890364428252505e-04, 3.0168828054291303e-05],
    "c2": [1.4160679068714144e00, -7.0767628542223025e-05, -1.6799703811438677e-06],
}


def test_example2_fixture():
    sol = oracle_solution(example2(), 200, 0.01)
    np.testing.assert_allclose(sol.c1[[0, 2, 4]], EXAMPLE2_FIXTURE["c1"], rtol=1e-7)
    np.testing.assert_allclose(sol.c2[[0, 2, 4]], EXAMPLE2_FIXTURE["c2"], rtol=1e-7)


def test_mode_count_convergence():
    p = example2()
    a = oracle_solution(p, 200, 0.01)
    b = oracle_solution(p, 400, 0.01)
    for u, v in ((a.c1, b.c1), (a.c2, b.c2)):
        diff = np.sqrt(np.sum((u - v[:200]) ** 2) + np.sum(v[200:] ** 2))
        assert diff < 1e-9


def test_oracle_rejects_unsupported():
    with pytest.raises(ValueError):
        oracle_solution(get_problem("example4"), 10, 0.01)
    with pytest.raises(ValueError):
        oracle_solution(get_problem("example1"), 10, 0.01)


def test_mittag_leffler_values():
    assert mittag_leffler(0.3, 0.0) == 1.0
    for x in (-0.5, -3.0, -20.0):
        assert mittag_leffler(1.0, x) == pytest.approx(math.exp(x), rel=1e-12)
    assert mittag_leffler(0.5, -1.0) == pytest.approx(0.427584, abs=1e-6)
    # E_{1/2}(-x) = exp(x^2) erfc(x)
    assert mittag_leffler(0.5, -1.0) == pytest.approx(math.exp(1.0) * math.erfc(1.0), rel=1e-13)
    assert mittag_leffler(0.5, -4.0) == pytest.approx(float(mpmath.exp(16) * mpmath.erfc(4)), rel=1e-12)


def test_mittag_leffler_domain():
    with pytest.raises(ValueError):
        mittag_leffler(0.5, 1.0)
    with pytest.raises(ValueError):
        mittag_leffler(1.5, -1.0)
    with pytest.raises(ValueError):
        mittag_leffler(0.1, -40.0, max_digits=200)


def test_sin_coefficients_for_sin_datum():
    c = sine_coefficients(SIN1, 5)
    np.testing.assert_allclose(c, [1 / math.sqrt(2), 0, 0, 0, 0], atol=1e-14)
