"""Procrustes alignment of embedding sequences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .embed import DirectedEmbedding, Signature
from .errors import ConvergenceError

__all__ = [
    "GpaResult",
    "IndefiniteProcrustesResult",
    "procrustes",
    "gpa",
    "gpa_directed",
    "indefinite_procrustes",
    "stack_directed",
    "centroid_size",
]


def procrustes(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Orthogonal Omega minimizing ||x1 - x2 Omega||_F.

    With x2^T x1 = U D V^T the minimizer is U V^T. A zero ``x2`` returns the
    identity.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise ValueError(f"shape mismatch: {x1.shape} vs {x2.shape}")
    M = x2.T @ x1
    if not np.any(M):
        return np.eye(x1.shape[1])
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def centroid_size(M: np.ndarray) -> float:
    """Frobenius norm of the column-centred matrix."""
    return float(np.linalg.norm(M - M.mean(axis=0, keepdims=True)))


@dataclass
class GpaResult:
    rotated: list
    reference: np.ndarray
    objective_trace: list
    iterations: int
    rotations: list = field(default_factory=list)

    @property
    def mean(self) -> np.ndarray:
        return self.reference / len(self.rotated)


def _gpa_objective(mats, reference_mean):
    return float(sum(np.sum((M - reference_mean) ** 2) for M in mats))


def gpa(matrices: Sequence[np.ndarray], tol: float = 1e-8, max_iter: int = 200) -> GpaResult:
    """Generalized Procrustes analysis.

    The reference starts at the first matrix. Each iteration rotates every
    matrix onto the reference and resets the reference to the sum of the
    rotated matrices; rotations are unchanged by positive rescaling of the
    reference, so the criterion is tracked against reference / T. The trace
    starts with the criterion at the initial reference and stops when two
    consecutive values differ by less than ``tol``.
    """
    mats = [np.asarray(M, dtype=np.float64) for M in matrices]
    if len(mats) < 2:
        raise ValueError("gpa needs at least two matrices")
    shape = mats[0].shape
    if any(M.shape != shape for M in mats):
        raise ValueError("all matrices must share one shape")
    T = len(mats)
    size_before = sum(centroid_size(M) ** 2 for M in mats)

    reference = mats[0].copy()
    rotations = [np.eye(shape[1]) for _ in mats]
    current = list(mats)
    trace = [_gpa_objective(current, reference)]
    for it in range(1, max_iter + 1):
        rotations = [procrustes(reference, M) for M in mats]
        current = [M @ Om for M, Om in zip(mats, rotations)]
        reference = sum(current)
        trace.append(_gpa_objective(current, reference / T))
        if abs(trace[-2] - trace[-1]) < tol:
            size_after = sum(centroid_size(M) ** 2 for M in current)
            if abs(size_after - size_before) > 1e-8 * max(size_before, 1.0):
                raise ConvergenceError("centroid-size constraint violated", trace=trace)
            return GpaResult(current, reference, trace, it, rotations)
    raise ConvergenceError(
        f"GPA did not converge in {max_iter} iterations", residual=abs(trace[-2] - trace[-1]), trace=trace
    )


def _stack(e: DirectedEmbedding) -> np.ndarray:
    return np.vstack([e.sources, e.targets])


def stack_directed(e1: DirectedEmbedding, e2: DirectedEmbedding) -> np.ndarray:
    """Joint rotation aligning (X2, Y2) onto (X1, Y1) via the stacked matrices."""
    if e1.sources.shape != e2.sources.shape or e1.targets.shape != e2.targets.shape:
        raise ValueError("directed embeddings must have matching shapes")
    return procrustes(_stack(e1), _stack(e2))


def gpa_directed(embeddings: Sequence[DirectedEmbedding], tol: float = 1e-8, max_iter: int = 200):
    """GPA on stacked source/target matrices.

    Returns the GPA result on the stacks together with the aligned
    :class:`DirectedEmbedding` list.
    """
    n1 = embeddings[0].sources.shape[0]
    res = gpa([_stack(e) for e in embeddings], tol=tol, max_iter=max_iter)
    aligned = [DirectedEmbedding(M[:n1], M[n1:], e.snapshot_id) for M, e in zip(res.rotated, embeddings)]
    return res, aligned


@dataclass(frozen=True)
class IndefiniteProcrustesResult:
    omega: np.ndarray
    objective: float
    constraint_residual: float
    certified: bool


def _cayley(params, J, d):
    K = np.zeros((d, d))
    K[np.triu_indices(d, 1)] = params
    K = K - K.T
    A = J @ K
    eye = np.eye(d)
    return np.linalg.solve(eye - A, eye + A)


def _block_procrustes(x1, x2, d_plus):
    # best element of O(d_plus) x O(d_minus), a subgroup of O(d_plus, d_minus)
    d = x1.shape[1]
    omega = np.zeros((d, d))
    if d_plus:
        omega[:d_plus, :d_plus] = procrustes(x1[:, :d_plus], x2[:, :d_plus])
    if d > d_plus:
        omega[d_plus:, d_plus:] = procrustes(x1[:, d_plus:], x2[:, d_plus:])
    return omega


def indefinite_procrustes(x1, x2, signature: Signature, seed: int = 0, n_perturb: int = 4,
                          max_rounds: int = 20) -> IndefiniteProcrustesResult:
    """Numerically minimize ||x1 - x2 Omega||_F over the indefinite orthogonal group.

    Omega is parameterized as Omega_0 * cayley(J K) with K skew-symmetric and
    J = I(d_plus, d_minus), which stays inside the group for every K. BFGS is
    run from the identity, from the block-orthogonal Procrustes solution and
    from ``n_perturb`` seeded perturbations; each run re-centres Omega_0 on
    its current iterate until the objective stops improving.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise ValueError(f"shape mismatch: {x1.shape} vs {x2.shape}")
    d = x1.shape[1]
    if signature.d != d:
        raise ValueError("signature dimension does not match the embeddings")
    if signature.d_minus == 0:
        omega = procrustes(x1, x2)
        obj = float(np.linalg.norm(x1 - x2 @ omega))
        return IndefiniteProcrustesResult(omega, obj, float(np.linalg.norm(omega.T @ omega - np.eye(d))), True)

    J = signature.metric()
    n_params = d * (d - 1) // 2
    rng = np.random.default_rng(seed)

    def objective(omega):
        return float(np.sum((x1 - x2 @ omega) ** 2))

    def run(omega0):
        best = omega0
        best_val = objective(best)
        for _ in range(max_rounds):
            base = best
            res = minimize(lambda p: objective(base @ _cayley(p, J, d)), np.zeros(n_params), method="BFGS",
                           options={"gtol": 1e-12, "maxiter": 500})
            cand = base @ _cayley(res.x, J, d)
            val = objective(cand)
            if not np.isfinite(val) or val >= best_val - 1e-14 * max(best_val, 1.0):
                if np.isfinite(val) and val < best_val:
                    best, best_val = cand, val
                break
            best, best_val = cand, val
        return best, best_val, res.success

    starts = [np.eye(d), _block_procrustes(x1, x2, signature.d_plus)]
    for _ in range(n_perturb):
        starts.append(_cayley(0.5 * rng.standard_normal(n_params), J, d))

    best_omega, best_val, certified = np.eye(d), objective(np.eye(d)), False
    for omega0 in starts:
        omega, val, ok = run(omega0)
        if val < best_val:
            best_omega, best_val, certified = omega, val, ok
    residual = float(np.linalg.norm(best_omega.T @ J @ best_omega - J))
    if residual >= 1e-6:
        certified = False
    if best_val <= 1e-20:
        certified = True
    return IndefiniteProcrustesResult(best_omega, float(np.sqrt(best_val)), residual, certified)
