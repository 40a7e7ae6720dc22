import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from elastodtn.solver import (SolverError, SparseFactor, WoodburySolver, dense_oracle_solve,
                              factorize, woodbury_solve)
from oracles import dense_W, shell_system


@pytest.mark.parametrize("N,use_support", [(2, False), (4, False), (6, False), (4, True)])
def test_woodbury_matches_dense(params, geometry, rng, N, use_support):
    A, U, V, rows = shell_system(params, geometry, N)
    assert A.shape[0] <= 500
    fact = factorize(A, support=rows if use_support else None)
    ws = WoodburySolver(fact, U, V, rows)
    W = dense_W(A, U, V, rows)
    for _ in range(10):
        b = rng.standard_normal(A.shape[0]) + 1j * rng.standard_normal(A.shape[0])
        x = ws.solve(b)
        assert np.linalg.norm(W @ x - b) <= 1e-8 * np.linalg.norm(b)
        ref = dense_oracle_solve(W, b)
        assert np.linalg.norm(x - ref) <= 1e-8 * np.linalg.norm(ref)


def test_capacity_paths(params, geometry):
    A, U, V, rows = shell_system(params, geometry, 2)
    assert WoodburySolver(factorize(A), U, V, rows).capacity == U.shape[1]
    A, U, V, rows = shell_system(params, geometry, 6)
    assert WoodburySolver(factorize(A), U, V, rows).capacity == rows.size
    ws = WoodburySolver(factorize(A, support=rows), U, V, rows)
    assert ws.sigma is not None and ws.capacity == rows.size


def test_schur_complement_is_exact(params, geometry):
    A, _, _, rows = shell_system(params, geometry, 1)
    fact = factorize(A, support=rows)
    assert fact.schur is not None
    rest = np.setdiff1d(np.arange(A.shape[0]), rows)
    Ad = A.toarray()
    ref = Ad[np.ix_(rows, rows)] - Ad[np.ix_(rows, rest)] @ np.linalg.solve(
        Ad[np.ix_(rest, rest)], Ad[np.ix_(rest, rows)])
    np.testing.assert_allclose(fact.schur, ref, atol=1e-9 * np.abs(ref).max())


def test_sparse_factor_solves_complex_and_blocks(params, geometry, rng):
    A, _, _, rows = shell_system(params, geometry, 1)
    for fact in (factorize(A), factorize(A, support=rows)):
        B = rng.standard_normal((A.shape[0], 3)) + 1j * rng.standard_normal((A.shape[0], 3))
        X = fact.solve(B)
        assert np.linalg.norm(A @ X - B) <= 1e-10 * np.linalg.norm(B)


def test_gmres_method(params, geometry, rng):
    A, U, V, rows = shell_system(params, geometry, 2)
    b = rng.standard_normal(A.shape[0])
    x = woodbury_solve(factorize(A, method="gmres"), U, V, b, rows)
    W = dense_W(A, U, V, rows)
    assert np.linalg.norm(W @ x - b) <= 1e-7 * np.linalg.norm(b)


def test_unknown_method():
    with pytest.raises(ValueError):
        SparseFactor(sp.eye(3), method="cholesky")


def test_shape_mismatch_rejected():
    fact = factorize(sp.eye(4).tocsc())
    with pytest.raises(SolverError):
        WoodburySolver(fact, np.ones((3, 2)), np.ones((2, 4)), rows=np.arange(3))


def test_singular_capacity_detected():
    # A - U V = I - e1 e1^T is singular
    n = 5
    A = sp.eye(n).tocsc()
    U = np.zeros((n, 1))
    U[0, 0] = 1.0
    with pytest.raises(SolverError, match="singular"):
        WoodburySolver(factorize(A), U, U.T)


def test_dense_oracle_rejects_large():
    with pytest.raises(SolverError):
        dense_oracle_solve(np.eye(3001), np.ones(3001))


@given(st.integers(3, 25), st.integers(1, 4), st.integers(0, 10**6))
def test_woodbury_random_property(n, k, seed):
    """Sherman-Morrison-Woodbury on diagonally dominant sparse matrices and random rank-k terms."""
    r = np.random.default_rng(seed)
    A = sp.random(n, n, density=0.3, random_state=seed) + sp.eye(n) * (n + 2.0)
    A = (A + A.T).tocsc()
    rows = np.sort(r.choice(n, size=r.integers(1, n + 1), replace=False))
    U = 0.3 * (r.standard_normal((rows.size, k)) + 1j * r.standard_normal((rows.size, k)))
    V = 0.3 * (r.standard_normal((k, rows.size)) + 1j * r.standard_normal((k, rows.size)))
    b = r.standard_normal(n) + 1j * r.standard_normal(n)
    W = A.toarray().astype(complex)
    W[np.ix_(rows, rows)] -= U @ V
    if np.linalg.cond(W) > 1e8:
        return
    for support in (None, rows):
        x = woodbury_solve(factorize(A, support=support), U, V, b, rows)
        assert np.linalg.norm(W @ x - b) <= 1e-9 * np.linalg.norm(b)
