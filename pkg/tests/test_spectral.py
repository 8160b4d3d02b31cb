import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from rdpglink.errors import StructureError
from rdpglink.spectral import profile_log_likelihood, select_dim_elbow, truncated_eig, truncated_svd


def sym_sparse(n, density, seed):
    rng = np.random.default_rng(seed)
    M = sp.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal).toarray()
    return M + M.T


def subspace_angle(U, V):
    s = np.linalg.svd(U.T @ V, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1, 1)))


def test_eig_zero_matrix():
    e = truncated_eig(np.zeros((2, 2)), 1)
    assert e.values[0] == 0
    assert np.isclose(np.linalg.norm(e.vectors[:, 0]), 1)


def test_eig_two_cycle_tie_breaks_positive():
    e = truncated_eig(np.array([[0.0, 1.0], [1.0, 0.0]]), 2)
    np.testing.assert_allclose(e.values, [1.0, -1.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(e.vectors), np.full((2, 2), 1 / np.sqrt(2)), atol=1e-12)
    np.testing.assert_allclose(e.vectors[:, 0], [1 / np.sqrt(2)] * 2, atol=1e-12)


def test_eig_full_rank_matches_dense():
    A = sym_sparse(30, 0.2, 1)
    e = truncated_eig(sp.csr_matrix(A), 30)
    w, V = np.linalg.eigh(A)
    order = np.argsort(-np.abs(w), kind="stable")
    np.testing.assert_allclose(e.values, w[order], atol=1e-8)
    # compare per-eigenvalue subspaces (no repeated eigenvalues for this draw)
    for k in range(30):
        assert subspace_angle(e.vectors[:, [k]], V[:, [order[k]]]) < 1e-6


def test_eig_rejects_asymmetric():
    with pytest.raises(StructureError):
        truncated_eig(np.triu(np.ones((5, 5))), 2)
    with pytest.raises(ValueError):
        truncated_eig(np.eye(3), 4)


def test_svd_identity():
    t = truncated_svd(np.eye(3), 2)
    np.testing.assert_allclose(t.s, [1, 1], atol=1e-12)
    P = t.u @ t.v.T
    np.testing.assert_allclose(P @ P.T @ P, P, atol=1e-10)


def test_svd_rank_one():
    x = np.array([1.0, 2.0, -1.0, 0.5])
    y = np.array([3.0, 0.0, 1.0])
    t = truncated_svd(np.outer(x, y), 1)
    assert np.isclose(t.s[0], np.linalg.norm(x) * np.linalg.norm(y))
    assert abs(abs(t.u[:, 0] @ x) / np.linalg.norm(x) - 1) < 1e-12
    assert abs(abs(t.v[:, 0] @ y) / np.linalg.norm(y) - 1) < 1e-12


def test_svd_full_rank_matches_dense():
    rng = np.random.default_rng(2)
    A = sp.random(25, 18, density=0.3, random_state=rng).toarray()
    t = truncated_svd(sp.csr_matrix(A), 18)
    np.testing.assert_allclose(t.s, np.linalg.svd(A, compute_uv=False), atol=1e-8)


@given(st.integers(2, 40), st.integers(0, 10_000))
def test_eig_reconstruction_full_rank(n, seed):
    A = sym_sparse(n, 0.3, seed)
    e = truncated_eig(A, n)
    R = (e.vectors * e.values) @ e.vectors.T
    assert np.linalg.norm(R - A) <= 1e-8 * max(1.0, np.linalg.norm(A))
    np.testing.assert_allclose(e.vectors.T @ e.vectors, np.eye(n), atol=1e-8)
    assert np.all(np.diff(np.abs(e.values)) <= 1e-12 * max(1.0, np.abs(e.values).max()))


@given(st.integers(2, 30), st.integers(2, 30), st.integers(0, 10_000))
def test_svd_reconstruction_full_rank(n, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, m)) * (rng.random((n, m)) < 0.4)
    k = min(n, m)
    t = truncated_svd(A, k)
    assert np.linalg.norm((t.u * t.s) @ t.v.T - A) <= 1e-8 * max(1.0, np.linalg.norm(A))
    assert np.all(t.s >= 0) and np.all(np.diff(t.s) <= 1e-12)


@given(st.integers(3, 25), st.integers(0, 10_000))
def test_psd_eigenvalues_nonnegative(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 2))
    e = truncated_eig(X @ X.T, min(n, 4))
    assert e.values.min() >= -1e-8


def test_elbow_examples():
    assert select_dim_elbow([10, 10, 10, 1, 1, 1]) == 3
    vals = [5, 4, 3, 2, 1]
    # exhaustive evaluation of the two-group Gaussian profile likelihood
    def oracle_ll(v, q):
        v = np.asarray(v, float)
        g1, g2 = v[:q], v[q:]
        var = (((g1 - g1.mean()) ** 2).sum() + ((g2 - g2.mean()) ** 2).sum()) / v.size
        return np.sum(-0.5 * np.log(2 * np.pi * var) - 0.5 * np.r_[(g1 - g1.mean()) ** 2, (g2 - g2.mean()) ** 2] / var)
    best = max(range(1, 5), key=lambda q: (oracle_ll(vals, q), -q))
    assert select_dim_elbow(vals, max_rank=5) == best
    for q in range(1, 5):
        assert np.isclose(profile_log_likelihood(vals, q), oracle_ll(vals, q))
    assert select_dim_elbow([2.0] * 6) == 1
    with pytest.raises(ValueError):
        select_dim_elbow([2.0, 1.0])


@given(st.lists(st.floats(0.01, 100), min_size=3, max_size=30), st.floats(0.01, 100))
def test_elbow_scale_invariant(vals, c):
    vals = sorted(vals, reverse=True)
    assert select_dim_elbow(vals) == select_dim_elbow([c * v for v in vals])
