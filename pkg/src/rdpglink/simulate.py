"""Synthetic dynamic networks with retained ground truth.

Every generator draws from a Philox counter-based bit generator seeded
through ``numpy.random.SeedSequence``; per-snapshot streams are spawned from
the root sequence, so a seed fixes the output byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .embed import Signature
from .errors import InvalidLatentPositionError
from .graph import GraphKind, SnapshotSeries

__all__ = [
    "make_rng",
    "SeasonalSbmConfig",
    "SeasonalSbmTruth",
    "LogisticDynConfig",
    "LogisticDynTruth",
    "seasonal_sbm",
    "logistic_dynamic",
    "grdpg_sample",
    "sbm_probabilities",
    "write_ground_truth",
]


def make_rng(seed) -> np.random.Generator:
    """Philox generator for an integer seed or a SeedSequence."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def _sample_upper(prob_upper, n, rng):
    rows, cols = np.triu_indices(n, k=1)
    hit = rng.random(rows.size) < prob_upper
    r, c = rows[hit], cols[hit]
    data = np.ones(2 * r.size)
    return sp.csr_matrix((data, (np.r_[r, c], np.r_[c, r])), shape=(n, n))


@dataclass(frozen=True)
class SeasonalSbmConfig:
    n: int = 100
    K: int = 5
    T: int = 100
    s: int = 7
    beta_a: float = 1.2
    beta_b: float = 1.2
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.K <= self.n:
            raise ValueError("need 1 <= K <= n")
        if self.s < 1 or self.T < 1:
            raise ValueError("need s >= 1 and T >= 1")
        if self.beta_a <= 0 or self.beta_b <= 0:
            raise ValueError("Beta shape parameters must be positive")


@dataclass(frozen=True)
class SeasonalSbmTruth:
    B: np.ndarray
    allocations: np.ndarray  # (n, s), zero-based community of node i at phase u
    s: int

    def phase(self, t: int) -> int:
        """Phase of the 1-based snapshot index t."""
        return t % self.s

    def probabilities(self, t: int) -> np.ndarray:
        z = self.allocations[:, self.phase(t)]
        P = self.B[np.ix_(z, z)]
        np.fill_diagonal(P, 0.0)
        return P

    def to_dict(self):
        return {"model": "seasonal-sbm", "s": self.s, "B": self.B.tolist(),
                "allocations": self.allocations.tolist()}


def sbm_probabilities(B, z) -> np.ndarray:
    P = np.asarray(B)[np.ix_(z, z)]
    np.fill_diagonal(P, 0.0)
    return P


def seasonal_sbm(cfg: SeasonalSbmConfig):
    """Undirected SBM whose community allocations cycle with period s.

    Snapshot t (1-based) uses the allocations of phase ``t mod s``.
    """
    root = np.random.SeedSequence(cfg.seed)
    param_ss, *snap_ss = root.spawn(cfg.T + 1)
    rng = make_rng(param_ss)
    B = np.zeros((cfg.K, cfg.K))
    iu = np.triu_indices(cfg.K)
    B[iu] = rng.beta(cfg.beta_a, cfg.beta_b, size=iu[0].size)
    B = B + np.triu(B, 1).T
    z = rng.integers(0, cfg.K, size=(cfg.n, cfg.s))
    truth = SeasonalSbmTruth(B, z, cfg.s)
    rows, cols = np.triu_indices(cfg.n, k=1)
    snaps = []
    for t in range(1, cfg.T + 1):
        zt = z[:, truth.phase(t)]
        snaps.append(_sample_upper(B[zt[rows], zt[cols]], cfg.n, make_rng(snap_ss[t - 1])))
    return SnapshotSeries(GraphKind.UNDIRECTED, tuple(snaps), tuple(range(cfg.n))), truth


@dataclass(frozen=True)
class LogisticDynConfig:
    n: int = 100
    T: int = 100
    theta: float = 0.075
    baseline_low: float = -6.9
    baseline_high: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.baseline_low < self.baseline_high:
            raise ValueError("baseline_low must be below baseline_high")
        if self.n < 2 or self.T < 1:
            raise ValueError("need n >= 2 and T >= 1")


@dataclass(frozen=True)
class LogisticDynTruth:
    b: np.ndarray
    c: np.ndarray
    theta: float

    def probabilities(self, t: int) -> np.ndarray:
        """v_ijt for the 1-based snapshot index t (zero diagonal)."""
        V = expit(self.b + self.c * self.theta * (t - 1))
        np.fill_diagonal(V, 0.0)
        return V

    def to_dict(self):
        return {"model": "logistic-dynamic", "theta": self.theta, "b": self.b.tolist(), "c": self.c.tolist()}


def logistic_dynamic(cfg: LogisticDynConfig):
    """Directed graphs with logit(v_ijt) = b_ij + c_ij theta (t - 1)."""
    root = np.random.SeedSequence(cfg.seed)
    param_ss, *snap_ss = root.spawn(cfg.T + 1)
    rng = make_rng(param_ss)
    n = cfg.n
    b = rng.uniform(cfg.baseline_low, cfg.baseline_high, size=(n, n))
    c = np.where(rng.random((n, n)) < 0.5, -1.0, 1.0)
    np.fill_diagonal(b, 0.0)
    np.fill_diagonal(c, 0.0)
    truth = LogisticDynTruth(b, c, cfg.theta)
    off = ~np.eye(n, dtype=bool)
    snaps = []
    for t in range(1, cfg.T + 1):
        V = truth.probabilities(t)
        hit = (make_rng(snap_ss[t - 1]).random((n, n)) < V) & off
        snaps.append(sp.csr_matrix(hit.astype(np.float64)))
    return SnapshotSeries(GraphKind.DIRECTED, tuple(snaps), tuple(range(n))), truth


def grdpg_sample(X, signature: Signature, seed=0, tol: float = 1e-10) -> sp.csr_matrix:
    """Symmetric hollow adjacency with P(A_ij = 1) = x_i^T I(d+, d-) x_j."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != signature.d:
        raise ValueError("signature dimension does not match the positions")
    P = (X * np.diag(signature.metric())) @ X.T
    off = ~np.eye(X.shape[0], dtype=bool)
    if np.any(P[off] < -tol) or np.any(P[off] > 1 + tol):
        raise InvalidLatentPositionError("latent positions give link probabilities outside [0, 1]")
    P = np.clip(P, 0.0, 1.0)
    rows, cols = np.triu_indices(X.shape[0], k=1)
    return _sample_upper(P[rows, cols], X.shape[0], make_rng(seed))


def write_ground_truth(truth, config, path) -> None:
    doc = {"config": asdict(config), "truth": truth.to_dict()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
