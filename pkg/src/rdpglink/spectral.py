"""Truncated eigendecompositions and SVDs of large sparse matrices.

The eigensolver is a thick-restart Lanczos iteration with full
reorthogonalization and explicit Rayleigh-Ritz extraction; it accepts
sparse matrices, dense arrays or any ``scipy.sparse.linalg.LinearOperator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from . import _accel
from .errors import ConvergenceError, StructureError

__all__ = [
    "EigPair",
    "SvdTriple",
    "truncated_eig",
    "truncated_svd",
    "select_dim_elbow",
    "profile_log_likelihood",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_RESTARTS = 300


@dataclass(frozen=True)
class EigPair:
    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class SvdTriple:
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


class _Operator:
    """Uniform matvec/rmatvec access with a Frobenius-norm bound when available."""

    def __init__(self, A):
        if isinstance(A, LinearOperator):
            self.shape = A.shape
            self._mv = A.matvec
            self._rmv = A.rmatvec
            self.norm = None
        elif sp.issparse(A):
            A = sp.csr_matrix(A, dtype=np.float64)
            At = A.T.tocsr()
            self.shape = A.shape
            self.norm = float(np.sqrt(np.sum(A.data ** 2)))
            self._mv = self._csr(A)
            self._rmv = self._csr(At)
            self.matrix = A
        else:
            A = np.asarray(A, dtype=np.float64)
            if A.ndim != 2:
                raise StructureError("expected a 2-d matrix")
            self.shape = A.shape
            self.norm = float(np.linalg.norm(A))
            self._mv = A.__matmul__
            self._rmv = A.T.__matmul__
            self.matrix = A

    @staticmethod
    def _csr(A):
        indptr, indices, data = A.indptr, A.indices, A.data

        def mv(x):
            return _accel.kernels().csr_matvec(indptr, indices, data, np.ascontiguousarray(x, dtype=np.float64))

        return mv

    def matvec(self, x):
        return np.asarray(self._mv(x), dtype=np.float64).reshape(-1)

    def rmatvec(self, x):
        return np.asarray(self._rmv(x), dtype=np.float64).reshape(-1)


def _check_symmetric(op: _Operator, rng, samples=1000):
    if op.shape[0] != op.shape[1]:
        raise StructureError(f"matrix of shape {op.shape} is not square")
    M = getattr(op, "matrix", None)
    if M is None:
        return
    if sp.issparse(M):
        if M.nnz <= 200_000:
            diff = abs(M - M.T)
            bad = diff.nnz and diff.max() > 1e-12 * max(abs(M).max(), 1.0)
        else:
            coo = M.tocoo()
            pick = rng.choice(coo.nnz, size=samples, replace=False)
            fwd = coo.data[pick]
            back = np.asarray(M[coo.col[pick], coo.row[pick]]).ravel()
            bad = np.any(np.abs(fwd - back) > 1e-12 * np.abs(fwd).max())
    else:
        bad = not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * max(np.abs(M).max(), 1.0))
    if bad:
        raise StructureError("matrix is not symmetric")


def _orthogonalize(V, w):
    # classical Gram-Schmidt applied twice
    for _ in range(2):
        w = w - V @ (V.T @ w)
    return w


def _fix_signs(vectors, *others):
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return (vectors * signs,) + tuple(o * signs for o in others)


def _magnitude_order(theta):
    # decreasing |value|, ties towards the positive value
    return np.lexsort((-theta, -np.abs(theta)))


def _lanczos(matvec, n, d, tol, max_restarts, seed, ncv, norm):
    rng = np.random.default_rng(seed)
    m = min(n, ncv if ncv is not None else max(2 * d + 1, d + 20))
    V = np.zeros((n, m + 1))
    AV = np.zeros((n, m))
    v = rng.standard_normal(n)
    V[:, 0] = v / np.linalg.norm(v)
    k = 0
    scale = norm
    worst = np.inf
    for _restart in range(max_restarts + 1):
        for j in range(k, m):
            w = matvec(V[:, j])
            AV[:, j] = w
            if j + 1 == m and m == n:
                break
            r = _orthogonalize(V[:, :j + 1], w)
            beta = np.linalg.norm(r)
            wn = np.linalg.norm(w)
            if scale is None or wn > scale:
                scale = wn if scale is None else max(scale, wn)
            if beta <= 1e-12 * max(wn, 1e-300) or beta == 0.0:
                r = _orthogonalize(V[:, :j + 1], rng.standard_normal(n))
                beta = np.linalg.norm(r)
            V[:, j + 1] = r / beta

        H = V[:, :m].T @ AV
        H = 0.5 * (H + H.T)
        theta, Y = np.linalg.eigh(H)
        order = _magnitude_order(theta)
        theta, Y = theta[order], Y[:, order]
        X = V[:, :m] @ Y
        AX = AV @ Y
        res = np.linalg.norm(AX[:, :d] - X[:, :d] * theta[:d], axis=0)
        anorm = max(scale or 0.0, np.abs(theta).max() if theta.size else 0.0)
        worst = res.max() if res.size else 0.0
        if m == n or worst <= tol * anorm:
            return theta[:d], X[:, :d]

        keep = min(m - 1, d + (m - d) // 2)
        V[:, :keep] = X[:, :keep]
        AV[:, :keep] = AX[:, :keep]
        # the trailing Lanczos vector is orthogonal to every Ritz vector
        V[:, keep] = V[:, m]
        k = keep
    raise ConvergenceError(
        f"Lanczos did not converge after {max_restarts} restarts (residual {worst:.3e})",
        residual=worst,
    )


def truncated_eig(A, d: int, tol: float = DEFAULT_TOL, max_restarts: int = DEFAULT_MAX_RESTARTS,
                  seed: int = 0, ncv: int | None = None, check_symmetry: bool = True) -> EigPair:
    """Top-``d`` eigenpairs of a symmetric matrix by decreasing absolute value.

    Ties in magnitude between +lambda and -lambda are broken toward the
    positive eigenvalue. Each eigenvector is signed so that its largest
    absolute coordinate is positive.
    """
    op = _Operator(A)
    n = op.shape[0]
    if check_symmetry:
        _check_symmetric(op, np.random.default_rng(seed))
    elif op.shape[0] != op.shape[1]:
        raise StructureError(f"matrix of shape {op.shape} is not square")
    if not 1 <= d <= n:
        raise ValueError(f"rank d must satisfy 1 <= d <= n={n}, got {d}")
    values, vectors = _lanczos(op.matvec, n, d, tol, max_restarts, seed, ncv, op.norm)
    (vectors,) = _fix_signs(vectors)
    return EigPair(values=values, vectors=vectors)


def truncated_svd(A, d: int, tol: float = DEFAULT_TOL, max_restarts: int = DEFAULT_MAX_RESTARTS,
                  seed: int = 0, ncv: int | None = None) -> SvdTriple:
    """Top-``d`` singular triplets.

    Lanczos runs on the smaller Gram operator; the resulting subspace is then
    refined by a thin SVD of A applied to it, which keeps small singular
    values accurate to machine precision relative to ||A||.
    """
    op = _Operator(A)
    n, m = op.shape
    if not 1 <= d <= min(n, m):
        raise ValueError(f"rank d must satisfy 1 <= d <= min{op.shape}, got {d}")
    gram_norm = None if op.norm is None else op.norm ** 2
    if m <= n:
        vals, basis = _lanczos(lambda x: op.rmatvec(op.matvec(x)), m, d, tol, max_restarts, seed, ncv, gram_norm)
        B = np.column_stack([op.matvec(basis[:, k]) for k in range(d)])
        U, s, Wt = np.linalg.svd(B, full_matrices=False)
        V = basis @ Wt.T
    else:
        vals, basis = _lanczos(lambda x: op.matvec(op.rmatvec(x)), n, d, tol, max_restarts, seed, ncv, gram_norm)
        C = np.column_stack([op.rmatvec(basis[:, k]) for k in range(d)])
        V, s, Wt = np.linalg.svd(C, full_matrices=False)
        U = basis @ Wt.T
    U, V = _fix_signs(U, V)
    return SvdTriple(u=U, s=s, v=V)


def profile_log_likelihood(values, q: int) -> float:
    """Two-group Gaussian profile log-likelihood with pooled variance.

    Group one holds ``values[:q]``, group two the rest. A zero pooled variance
    yields ``+inf``.
    """
    values = np.asarray(values, dtype=np.float64)
    g1, g2 = values[:q], values[q:]
    ss = np.sum((g1 - g1.mean()) ** 2) + np.sum((g2 - g2.mean()) ** 2)
    var = ss / values.size
    if var <= 1e-14 * max(np.mean(values ** 2), 1e-300):
        return np.inf
    return -0.5 * values.size * (np.log(2.0 * np.pi * var) + 1.0)


def select_dim_elbow(values, max_rank: int | None = None) -> int:
    """Elbow of a decreasing scree via the profile-likelihood criterion.

    Scans q = 1..max_rank-1 over the first ``max_rank`` values and returns the
    first maximizer.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 3:
        raise ValueError("need at least 3 values for the profile likelihood")
    if np.any(values < 0) or np.any(np.diff(values) > 0):
        raise ValueError("values must be non-negative and sorted in decreasing order")
    if max_rank is None:
        max_rank = min(values.size, 50)
    values = values[:max_rank]
    if values.size < 3:
        raise ValueError("max_rank must leave at least 3 values")
    ll = np.array([profile_log_likelihood(values, q) for q in range(1, values.size)])
    return int(np.argmax(ll)) + 1
