import numpy as np
import pytest
import scipy.sparse as sp

from excursus.gaussint import IntegralLimits, gaussint
from excursus.model import SparsePrecision
from excursus.normal import truncated_mass
from excursus.oracle import dense_box_probability
from excursus.sparse import Permutation, factorize

from conftest import ar1_precision, orthant_precision

INF = np.inf


def test_single_node_is_exact():
    r = gaussint([0.0], np.array([[1.0]]), ([0.0], [INF]))
    assert abs(r.P - 0.5) <= 3 * r.E + 1e-15
    assert r.E < 1e-15


def test_orthant_closed_form():
    r = gaussint([0.0, 0.0], orthant_precision(), ([0.0, 0.0], [INF, INF]), n_samples=100_000, seed=1)
    assert abs(r.P - 1 / 3) <= 3 * r.E
    assert r.E < 0.002


def test_unbounded_box():
    r = gaussint(np.zeros(6), ar1_precision(6), IntegralLimits.unbounded(6))
    assert r.P == 1.0 and r.E == 0.0
    np.testing.assert_array_equal(r.Pv, 1.0)


def test_ar1_against_dense_oracle():
    # oracle: 1e6 PCG64 draws, seed 2 (excursus oracle --samples 1000000 --seed 2)
    Q = ar1_precision(10)
    mu = np.linspace(-1, 1, 10)
    lim = (mu, np.full(10, INF))
    p_or, e_or = dense_box_probability(mu, Q.toarray(), *lim, n=1_000_000, seed=2)
    r = gaussint(mu, Q, lim, seed=0)
    assert abs(r.P - p_or) <= 3 * np.hypot(r.E, e_or)


def test_partials_non_increasing(rng):
    Q = ar1_precision(40, 0.8)
    mu = rng.normal(0, 1, 40)
    r = gaussint(mu, Q, (mu - 1.5, mu + 1.5), n_samples=5000)
    assert np.all(np.diff(r.Pv) <= 0)


def test_independence_factorization(diag_field):
    a = np.array([0.0, -1.0, 0.5, -INF, 0.0])
    b = np.array([INF, 0.5, 3.0, 0.7, 2.0])
    order = np.array([2, 0, 4, 1, 3])
    r = gaussint(diag_field.mu, diag_field.Q, (a, b), order=order, n_samples=20_000)
    sd = diag_field.sd
    exact = np.cumprod(truncated_mass((a - diag_field.mu) / sd, (b - diag_field.mu) / sd)[order])
    assert np.all(np.abs(r.Pv - exact) <= 3 * r.Ev + 1e-14)
    np.testing.assert_array_equal(r.order, order)


def test_threads_do_not_change_result():
    Q = ar1_precision(30)
    mu = np.zeros(30)
    lim = (np.full(30, -0.5), np.full(30, 2.0))
    r1 = gaussint(mu, Q, lim, n_samples=50_000, seed=11, threads=1)
    r4 = gaussint(mu, Q, lim, n_samples=50_000, seed=11, threads=4)
    np.testing.assert_array_equal(r1.Pv, r4.Pv)
    np.testing.assert_array_equal(r1.Ev, r4.Ev)


def test_environment_thread_fallback(monkeypatch):
    Q = ar1_precision(12)
    lim = (np.zeros(12), np.full(12, INF))
    base = gaussint(np.ones(12), Q, lim, n_samples=30_000)
    monkeypatch.setenv("EXCURSUS_THREADS", "3")
    np.testing.assert_array_equal(gaussint(np.ones(12), Q, lim, n_samples=30_000).Pv, base.Pv)


def test_error_halves_with_quadrupled_work():
    Q = ar1_precision(10)
    mu = np.linspace(-1, 1, 10)
    lim = (mu, np.full(10, INF))
    ratios = [
        gaussint(mu, Q, lim, n_samples=4000, seed=s).E / gaussint(mu, Q, lim, n_samples=2000, seed=s + 1000).E
        for s in range(50)
    ]
    assert 0.5 <= np.mean(ratios) <= 1.2 / np.sqrt(2)


def test_symmetric_permutation_consistency():
    # reversing an AR(1) chain maps Q onto itself
    d = 12
    Q = ar1_precision(d)
    rev = np.arange(d)[::-1]
    a = np.linspace(-1, 0.2, d)
    a = np.minimum(a, a[::-1])
    b = np.full(d, 1.5)
    order = np.array([3, 7, 0, 11, 5, 1, 9, 2, 8, 4, 10, 6])
    r1 = gaussint(np.zeros(d), Q, (a, b), order=order, n_samples=40_000, seed=1)
    r2 = gaussint(np.zeros(d), Q, (a, b), order=rev[order], n_samples=40_000, seed=2)
    assert np.all(np.abs(r1.Pv - r2.Pv) <= 3 * np.hypot(r1.Ev, r2.Ev) + 1e-15)


def test_early_stop():
    Q = ar1_precision(30, 0.3)
    lim = (np.zeros(30), np.full(30, INF))
    r = gaussint(np.full(30, 0.5), Q, lim, alpha_stop=0.5, n_samples=10_000)
    assert r.stopped_early
    k = r.n_processed
    assert r.Pv[k - 1] + r.Ev[k - 1] < 0.5
    assert np.all(r.Pv[: k - 1] + r.Ev[: k - 1] >= 0.5)
    assert np.all(np.isnan(r.Pv[k:]))
    assert r.P == r.Pv[k - 1]


def test_zero_weight_propagates_exactly():
    # box 60 sd away from the mean: every weight underflows to zero
    r = gaussint([0.0, 0.0, 0.0], sp.identity(3, format="csc"), ([-1.0, 60.0, -1.0], [1.0, 61.0, 1.0]),
                 order=[0, 1, 2], n_samples=1000)
    assert r.zero_position == 1
    np.testing.assert_array_equal(r.Pv[1:], 0.0)
    assert r.P == 0.0


def test_factor_input_and_order_conflict():
    Q = ar1_precision(5)
    f = factorize(Q, Permutation([4, 2, 0, 1, 3]))
    lim = (np.zeros(5), np.full(5, INF))
    r = gaussint(np.zeros(5), f, lim, n_samples=2000)
    np.testing.assert_array_equal(r.order, [3, 1, 0, 2, 4])
    with pytest.raises(ValueError):
        gaussint(np.zeros(5), f, lim, order=[0, 1, 2, 3, 4])


def test_input_validation():
    Q = ar1_precision(3)
    with pytest.raises(ValueError):
        IntegralLimits([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        IntegralLimits([np.nan], [1.0])
    with pytest.raises(ValueError):
        gaussint(np.zeros(3), Q, (np.zeros(2), np.ones(2)))
    with pytest.raises(ValueError):
        gaussint(np.zeros(4), Q, (np.zeros(4), np.ones(4)))
    with pytest.raises(ValueError):
        gaussint(np.zeros(3), Q, (np.zeros(3), np.ones(3)), alpha_stop=0.0)
