import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import binom

from twostate_fp.cq import binomial_series, cq_weights, history_sum


def test_beta_zero_is_identity():
    w = cq_weights(0.0, 0.37, 6)
    np.testing.assert_array_equal(w.d, [1, 0, 0, 0, 0, 0])


def test_beta_one_is_backward_difference():
    w = cq_weights(1.0, 1.0, 5)
    np.testing.assert_array_equal(w.d, [1, -1, 0, 0, 0])


def test_beta_half_values():
    w = cq_weights(0.5, 1.0, 4)
    np.testing.assert_allclose(w.d, [1, -0.5, -0.125, -0.0625], rtol=0, atol=1e-16)


def test_tau_scaling():
    w = cq_weights(0.3, 0.01, 10)
    np.testing.assert_allclose(w.d, w.g * 0.01**-0.3, rtol=1e-15)


@pytest.mark.parametrize("beta", [0.1, 0.5, 0.9])
def test_recurrence_matches_binomial(beta):
    g = binomial_series(beta, 1600)
    j = np.arange(1600)
    direct = (-1.0) ** j * binom(beta, j)
    np.testing.assert_allclose(g, direct, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("beta", [0.05, 0.3, 0.77])
def test_sign_pattern_and_partial_sums(beta):
    g = binomial_series(beta, 2000)
    assert g[0] > 0 and np.all(g[1:] < 0)
    partial = np.cumsum(g)
    assert np.all(np.diff(partial) < 0)
    assert partial[-1] > 0
    # sum_j g_j = (1 - 1)^beta = 0; tail decays like L^-beta
    assert partial[-1] < 2000 ** (-beta)


@settings(max_examples=50, deadline=None)
@given(b1=st.floats(0.0, 0.5), b2=st.floats(0.0, 0.5))
def test_semigroup(b1, b2):
    n = 400
    conv = np.convolve(binomial_series(b1, n), binomial_series(b2, n))[:n]
    np.testing.assert_allclose(conv, binomial_series(b1 + b2, n), rtol=0, atol=1e-12)


def test_consistency_on_linear_function():
    # CQ of t -> t approximates the Riemann-Liouville derivative t^(1-beta)/Gamma(2-beta)
    beta, T = 0.4, 1.0
    exact = T ** (1 - beta) / math.gamma(2 - beta)
    errs = []
    for L in (50, 100, 200, 400):
        tau = T / L
        w = cq_weights(beta, tau, L + 1)
        u = tau * np.arange(L + 1)
        errs.append(abs(w.d @ u[::-1] - exact))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(rates - 1.0) < 0.1)


@pytest.mark.parametrize("kw", [dict(beta=-0.1, tau=1, count=3), dict(beta=1.2, tau=1, count=3),
                                dict(beta=0.5, tau=0, count=3), dict(beta=0.5, tau=1, count=0)])
def test_rejects_bad_arguments(kw):
    with pytest.raises(ValueError):
        cq_weights(**kw)


def test_weights_are_read_only():
    w = cq_weights(0.5, 1.0, 4)
    with pytest.raises(ValueError):
        w.d[0] = 2.0


def test_history_sum_empty():
    w = cq_weights(0.3, 0.1, 5)
    out = history_sum(w, [np.ones(3)], 1)
    np.testing.assert_array_equal(out, np.zeros(3))


def test_history_sum_backward_difference():
    w = cq_weights(1.0, 1.0, 3)
    v1 = np.array([1.0, -2.0, 3.5])
    np.testing.assert_array_equal(history_sum(w, [v1], 2), -v1)


def test_history_sum_matches_double_loop():
    rng = np.random.default_rng(7)
    w = cq_weights(0.3, 0.05, 30)
    hist = [rng.standard_normal(11) for _ in range(25)]
    for n in (2, 9, 26):
        ref = np.zeros(11)
        for i in range(1, n):
            for k in range(11):
                ref[k] += w.d[i] * hist[n - i - 1][k]
        np.testing.assert_allclose(history_sum(w, hist, n), ref, rtol=1e-13, atol=1e-13)


def test_history_sum_errors():
    w = cq_weights(0.3, 0.1, 4)
    with pytest.raises(ValueError):
        history_sum(w, [np.ones(2)], 3)  # needs v^1, v^2
    with pytest.raises(ValueError):
        history_sum(w, [np.ones(2)] * 6, 6)  # beyond the weights
    with pytest.raises(ValueError):
        history_sum(w, [np.ones(2), np.ones(3)], 3)
