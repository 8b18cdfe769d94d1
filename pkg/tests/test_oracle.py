import numpy as np
import pytest

from excursus.excursions import excursions_mc
from excursus.model import ExcursionSpec, SampleEnsemble
from excursus.oracle import dense_box_probability, dense_samples, oracle_F

from conftest import ar1_precision, orthant_precision

INF = np.inf


def test_single_node_half():
    p, se = dense_box_probability([0.0], [[1.0]], [0.0], [INF], n=1_000_000, seed=3)
    assert abs(p - 0.5) <= 0.0015
    assert se == pytest.approx(np.sqrt(p * (1 - p) / 1_000_000))


def test_unbounded_box_is_certain():
    p, se = dense_box_probability(np.zeros(4), np.eye(4), np.full(4, -INF), np.full(4, INF), n=1000)
    assert (p, se) == (1.0, 0.0)


def test_orthant_matches_closed_form():
    p, se = dense_box_probability([0, 0], orthant_precision().toarray(), [0, 0], [INF, INF],
                                  n=200_000, seed=5)
    assert abs(p - 1 / 3) <= 3 * se


def test_samples_have_target_covariance():
    Q = ar1_precision(5, 0.7).toarray()
    X = dense_samples(np.arange(5.0), Q, 200_000, seed=1)
    np.testing.assert_allclose(X.mean(axis=1), np.arange(5.0), atol=0.02)
    np.testing.assert_allclose(np.cov(X), np.linalg.inv(Q), atol=0.03)


def test_oracle_F_by_hand():
    X = np.array([[1.0, 1.0, -1.0, 1.0],
                  [1.0, -1.0, 1.0, 1.0]])
    lim = (np.zeros(2), np.full(2, INF))
    np.testing.assert_array_equal(oracle_F(X, [0, 1], lim), [0.75, 0.5])
    np.testing.assert_array_equal(oracle_F(X, [1, 0], lim), [0.75, 0.5])
    # a constraint every sample violates zeroes everything after it
    lim = (np.array([0.0, 5.0]), np.full(2, INF))
    np.testing.assert_array_equal(oracle_F(X, [0, 1], lim), [0.75, 0.0])


def test_oracle_F_monotone(rng):
    X = rng.normal(size=(12, 5000))
    F = oracle_F(X, rng.permutation(12), (np.full(12, -0.5), np.full(12, 2.0)))
    assert np.all(np.diff(F) <= 0)


def test_oracle_F_matches_mc_excursions(rng):
    Q = ar1_precision(15, 0.6).toarray()
    mu = np.linspace(-1.5, 2.0, 15)
    X = dense_samples(mu, Q, 20_000, seed=9)
    r = excursions_mc(SampleEnsemble(X), ExcursionSpec(0.3, ">", alpha=0.1))
    Fo = oracle_F(X, r.order, (np.full(15, 0.3), np.full(15, INF)))
    np.testing.assert_array_equal(r.F[r.order], Fo)
