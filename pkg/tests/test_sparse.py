import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from excursus.model import NotPositiveDefiniteError, SparsePrecision
from excursus.sparse import (
    Permutation,
    constrained_ordering,
    factorize,
    minimum_degree_ordering,
    sample_field,
    selected_inverse_diag,
    solve,
    solve_lower,
    solve_upper,
    symbolic_nnz,
)

from conftest import random_spd


def _recon_error(Q, f):
    p = f.perm.p
    L = f.L.toarray()
    A = Q.toarray()[np.ix_(p, p)]
    return np.abs(L @ L.T - A).max() / np.abs(A).max()


def test_identity_factor():
    f = factorize(SparsePrecision(sp.identity(3, format="csc")), Permutation.identity(3))
    np.testing.assert_array_equal(f.L.toarray(), np.eye(3))


def test_two_by_two_factor():
    f = factorize(SparsePrecision(np.array([[2.0, -1.0], [-1.0, 2.0]])), Permutation.identity(2))
    np.testing.assert_allclose(f.L.toarray(), [[np.sqrt(2), 0], [-1 / np.sqrt(2), np.sqrt(1.5)]], rtol=1e-15)


def test_indefinite_reports_pivot():
    with pytest.raises(NotPositiveDefiniteError) as info:
        factorize(SparsePrecision(np.array([[1.0, 2.0], [2.0, 1.0]])), Permutation.identity(2))
    assert info.value.index == 1
    assert "pivot 1" in str(info.value)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 200), st.integers(0, 2**31 - 1))
def test_reconstruction_any_permutation(d, seed):
    rng = np.random.default_rng(seed)
    Q = random_spd(d, rng, density=min(1.0, 4.0 / d))
    for perm in (Permutation.identity(d), Permutation(rng.permutation(d)), minimum_degree_ordering(Q)):
        f = factorize(Q, perm)
        assert np.all(f.diag > 0)
        assert _recon_error(Q, f) <= 1e-10


def test_permutation_algebra(rng):
    p = Permutation(rng.permutation(20))
    assert p.compose(p.inverse) == Permutation.identity(20)
    with pytest.raises(ValueError):
        Permutation([0, 0, 1])


def test_solves(rng):
    Q = random_spd(50, rng, density=0.1)
    f = factorize(Q, minimum_degree_ordering(Q))
    L = f.L.toarray()
    r = rng.standard_normal(50)
    assert np.abs(L @ solve_lower(f, r) - r).max() < 1e-10
    assert np.abs(L.T @ solve_upper(f, r) - r).max() < 1e-10
    assert np.abs(Q.toarray() @ solve(f, r) - r).max() < 1e-10
    eye = factorize(SparsePrecision(sp.identity(4, format="csc")))
    np.testing.assert_array_equal(solve_lower(eye, r[:4]), r[:4])
    with pytest.raises(ValueError):
        solve_lower(f, r[:10])


def test_two_by_two_forward_solve():
    f = factorize(SparsePrecision(np.array([[2.0, -1.0], [-1.0, 2.0]])), Permutation.identity(2))
    x = solve_lower(f, np.array([1.0, 0.0]))
    assert np.abs(f.L.toarray() @ x - [1.0, 0.0]).max() < 1e-12
    assert x[0] == pytest.approx(1 / np.sqrt(2), rel=1e-15)


def test_constrained_ordering_forced():
    Q = SparsePrecision(sp.identity(4, format="csc"))
    p = constrained_ordering(Q, [1, 0, 1, 0]).p
    assert set(p[:2]) == {1, 3} and set(p[2:]) == {0, 2}


def test_constrained_ordering_single_group():
    p = constrained_ordering(SparsePrecision(sp.identity(6, format="csc")), np.zeros(6, int)).p
    assert sorted(p) == list(range(6))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_constrained_ordering_label_monotone(d, n_groups, seed):
    rng = np.random.default_rng(seed)
    Q = random_spd(d, rng, density=min(1.0, 3.0 / d))
    groups = rng.integers(0, n_groups, d)
    p = constrained_ordering(Q, groups).p
    assert sorted(p) == list(range(d))
    assert np.all(np.diff(groups[p]) >= 0)


def test_constrained_ordering_reduces_fill():
    # 2-D grid Laplacian-like band: 10x10 lattice, bandwidth 10
    n = 10
    d = n * n
    rows, cols = [], []
    for i in range(d):
        for j in (i + 1, i + n):
            if j < d and not (j == i + 1 and j % n == 0):
                rows += [i, j]
                cols += [j, i]
    A = sp.coo_matrix((np.full(len(rows), -1.0), (rows, cols)), shape=(d, d)).tocsc()
    Q = SparsePrecision(A + sp.diags(np.full(d, 5.0)))
    groups = (np.arange(d) % n >= n // 2).astype(int)
    ours = symbolic_nnz(Q, constrained_ordering(Q, groups))
    naive = np.lexsort((np.arange(d), groups))
    assert ours <= symbolic_nnz(Q, Permutation(naive))
    assert factorize(Q, Permutation(naive)).nnz == symbolic_nnz(Q, Permutation(naive))


def test_min_degree_beats_natural(rng):
    Q = random_spd(150, rng, density=0.02)
    assert symbolic_nnz(Q, minimum_degree_ordering(Q)) <= symbolic_nnz(Q, Permutation.identity(150))


def test_sample_field_moments():
    n = 200_000
    f = factorize(SparsePrecision(sp.identity(3, format="csc")))
    X = sample_field(f, np.zeros(3), n, seed=5).values
    assert np.all(np.abs(X.mean(axis=1)) < 4 / np.sqrt(n))
    g = factorize(SparsePrecision(sp.csc_matrix([[4.0]])))
    v = sample_field(g, np.zeros(1), n, seed=6).values.var()
    assert abs(v - 0.25) < 0.025


def test_sample_field_covariance_and_determinism(rng):
    Q = random_spd(6, rng, density=0.6)
    f = factorize(Q, minimum_degree_ordering(Q))
    mu = rng.standard_normal(6)
    X = sample_field(f, mu, 100_000, seed=9).values
    np.testing.assert_array_equal(X, sample_field(f, mu, 100_000, seed=9).values)
    C = np.cov(X)
    np.testing.assert_allclose(C, np.linalg.inv(Q.toarray()), atol=0.02)
    # a chunk's draws do not depend on how many chunks follow
    np.testing.assert_array_equal(sample_field(f, mu, 100, seed=9).values, X[:, :100])


def test_selected_inverse_examples(rng):
    f = factorize(SparsePrecision(sp.diags([4.0, 9.0], format="csc")))
    np.testing.assert_allclose(selected_inverse_diag(f), [0.25, 1 / 9], rtol=1e-15)
    f = factorize(SparsePrecision(np.array([[2.0, -1.0], [-1.0, 2.0]])))
    np.testing.assert_allclose(selected_inverse_diag(f), [2 / 3, 2 / 3], rtol=1e-15)
    Q = random_spd(200, rng, density=0.02)
    f = factorize(Q, minimum_degree_ordering(Q))
    np.testing.assert_allclose(selected_inverse_diag(f), np.diag(np.linalg.inv(Q.toarray())), rtol=1e-10)
