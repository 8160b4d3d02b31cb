"""Spectral embeddings of single graphs and of graph sequences.

Covers the adjacency spectral embedding (ASE), its directed/bipartite SVD
analogue (DASE), the omnibus embedding and the multiple adjacency spectral
embedding (MASE) of the common-subspace (COSIE) model.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .errors import InfeasibleSizeError, StructureError
from .graph import GraphKind, SnapshotSeries
from .spectral import truncated_eig, truncated_svd

__all__ = [
    "Signature",
    "Embedding",
    "DirectedEmbedding",
    "CosieDecomposition",
    "ase",
    "dase",
    "omnibus",
    "omnibus_matrix",
    "mase",
    "embed_series",
    "save_embeddings",
    "load_embeddings",
    "save_cosie",
    "load_cosie",
    "OMNIBUS_MAX_ROWS",
    "INDEFINITE",
    "EUCLIDEAN",
]

OMNIBUS_MAX_ROWS = 200_000

# x^T I(d+, d-) y, the link probability of the generalized RDPG
INDEFINITE = "indefinite"
# plain x^T y, which ignores the signature
EUCLIDEAN = "euclidean"
METRICS = (INDEFINITE, EUCLIDEAN)


def _check_metric(metric):
    if metric not in METRICS:
        raise ValueError(f"unknown inner product {metric!r}; choose from {METRICS}")


@dataclass(frozen=True)
class Signature:
    d_plus: int
    d_minus: int = 0

    def __post_init__(self):
        if self.d_plus < 0 or self.d_minus < 0:
            raise ValueError("signature counts must be non-negative")

    @property
    def d(self) -> int:
        return self.d_plus + self.d_minus

    def metric(self) -> np.ndarray:
        """The diagonal matrix I(d_plus, d_minus)."""
        return np.diag(np.r_[np.ones(self.d_plus), -np.ones(self.d_minus)])


@dataclass(frozen=True)
class Embedding:
    positions: np.ndarray
    signature: Signature
    snapshot_id: int | None = None

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def factors(self, metric: str = INDEFINITE):
        """(L, R) with L R^T the matrix of inner products under ``metric``."""
        _check_metric(metric)
        if metric == INDEFINITE and self.signature.d_minus:
            return self.positions * np.diag(self.signature.metric()), self.positions
        return self.positions, self.positions

    def gram(self, metric: str = INDEFINITE) -> np.ndarray:
        L, R = self.factors(metric)
        return L @ R.T

    @property
    def left(self):
        return self.positions

    @property
    def right(self):
        return self.positions


@dataclass(frozen=True)
class DirectedEmbedding:
    sources: np.ndarray
    targets: np.ndarray
    snapshot_id: int | None = None

    @property
    def d(self) -> int:
        return self.sources.shape[1]

    def factors(self, metric: str = INDEFINITE):
        _check_metric(metric)
        return self.sources, self.targets

    def gram(self, metric: str = INDEFINITE) -> np.ndarray:
        return self.sources @ self.targets.T

    @property
    def left(self):
        return self.sources

    @property
    def right(self):
        return self.targets


@dataclass(frozen=True)
class CosieDecomposition:
    """Shared basis (or basis pair) and per-snapshot weight matrices R_t."""

    basis: np.ndarray
    weights: np.ndarray
    right_basis: np.ndarray | None = None

    @property
    def T(self) -> int:
        return self.weights.shape[0]

    @property
    def right(self) -> np.ndarray:
        return self.basis if self.right_basis is None else self.right_basis

    def probabilities(self, t: int) -> np.ndarray:
        return self.basis @ self.weights[t] @ self.right.T


def ase(A, d: int, **solver) -> Embedding:
    """Adjacency spectral embedding X = Gamma |Lambda|^(1/2).

    Columns for positive eigenvalues come first, then those for negative
    ones (each group by decreasing magnitude), so the signature matrix is
    I(d+, d-).
    """
    eig = truncated_eig(A, d, **solver)
    order = np.argsort(eig.values < 0, kind="stable")
    values = eig.values[order]
    X = eig.vectors[:, order] * np.sqrt(np.abs(values))
    d_minus = int(np.sum(values < 0))
    return Embedding(X, Signature(d - d_minus, d_minus))


def dase(A, d: int, **solver) -> DirectedEmbedding:
    """Directed embedding X = U D^(1/2), Y = V D^(1/2) from the truncated SVD."""
    svd = truncated_svd(A, d, **solver)
    root = np.sqrt(svd.s)
    return DirectedEmbedding(svd.u * root, svd.v * root)


def _check_omnibus_size(series: SnapshotSeries, cap: int):
    rows = series.shape[0] * series.T
    if rows > cap:
        raise InfeasibleSizeError(
            f"omnibus matrix would have {rows} rows, above the cap of {cap}"
        )


def omnibus_matrix(series: SnapshotSeries, cap: int = OMNIBUS_MAX_ROWS) -> sp.csr_matrix:
    """Explicit sparse omnibus matrix with blocks (A_s + A_t)/2."""
    _check_omnibus_size(series, cap)
    T = series.T
    blocks = [[0.5 * (series[s] + series[t]) for t in range(T)] for s in range(T)]
    return sp.bmat(blocks, format="csr")


def _omnibus_operator(mats: Sequence[sp.csr_matrix]) -> LinearOperator:
    # block (s, t) = (A_s + A_t)/2, so y_s = A_s (sum_t x_t)/2 + (sum_t A_t x_t)/2
    T = len(mats)
    n1, n2 = mats[0].shape
    mats_t = [A.T.tocsr() for A in mats]

    def apply(ms, x, n_in, n_out):
        xs = x.reshape(T, n_in)
        total = xs.sum(axis=0)
        common = sum(M @ xs[t] for t, M in enumerate(ms))
        return np.concatenate([0.5 * (M @ total) + 0.5 * common for M in ms]).reshape(T * n_out)

    return LinearOperator(
        (T * n1, T * n2),
        matvec=lambda x: apply(mats, np.ravel(x), n2, n1),
        rmatvec=lambda x: apply(mats_t, np.ravel(x), n1, n2),
        dtype=np.float64,
    )


def omnibus(series: SnapshotSeries, d: int, cap: int = OMNIBUS_MAX_ROWS, **solver) -> list:
    """Per-snapshot embeddings sliced from the joint omnibus embedding.

    Directed and bipartite series use the DASE of the analogous block matrix.
    The block matrix is applied implicitly, never assembled.
    """
    _check_omnibus_size(series, cap)
    op = _omnibus_operator(series.snapshots)
    n1, n2 = series.shape
    out = []
    if series.kind is GraphKind.UNDIRECTED:
        emb = ase(op, d, **solver)
        for t in range(series.T):
            out.append(Embedding(emb.positions[t * n1:(t + 1) * n1], emb.signature, t))
    else:
        emb = dase(op, d, **solver)
        for t in range(series.T):
            out.append(DirectedEmbedding(emb.sources[t * n1:(t + 1) * n1],
                                         emb.targets[t * n2:(t + 1) * n2], t))
    return out


def _top_left(stacked: np.ndarray, d: int, **solver) -> np.ndarray:
    return truncated_svd(stacked, d, **solver).u


def mase(series: SnapshotSeries, d: int, **solver) -> CosieDecomposition:
    """Multiple adjacency spectral embedding.

    Stacks per-snapshot eigenvector (or singular vector) blocks, keeps the
    top-d left singular vectors as the shared basis and sets
    R_t = basis^T A_t basis (left/right bases for directed graphs).
    """
    if series.kind is GraphKind.UNDIRECTED:
        gammas = [truncated_eig(A, d, **solver).vectors for A in series.snapshots]
        X = _top_left(np.hstack(gammas), d, **solver)
        R = np.stack([X.T @ (A @ X) for A in series.snapshots])
        R = 0.5 * (R + R.transpose(0, 2, 1))
        return CosieDecomposition(X, R)
    svds = [truncated_svd(A, d, **solver) for A in series.snapshots]
    U = _top_left(np.hstack([s.u for s in svds]), d, **solver)
    V = _top_left(np.hstack([s.v for s in svds]), d, **solver)
    R = np.stack([U.T @ (A @ V) for A in series.snapshots])
    return CosieDecomposition(U, R, V)


EMBED_METHODS = ("individual-ase", "individual-dase", "omnibus")


def embed_series(series: SnapshotSeries, d: int, method: str = "individual-ase", **solver) -> list:
    """One embedding per snapshot using ``method``."""
    if method == "individual-ase":
        if series.kind is not GraphKind.UNDIRECTED:
            raise StructureError("individual-ase needs an undirected series; use individual-dase")
        out = [ase(A, d, **solver) for A in series.snapshots]
        return [Embedding(e.positions, e.signature, t) for t, e in enumerate(out)]
    if method == "individual-dase":
        out = [dase(A, d, **solver) for A in series.snapshots]
        return [DirectedEmbedding(e.sources, e.targets, t) for t, e in enumerate(out)]
    if method == "omnibus":
        return omnibus(series, d, **solver)
    raise ValueError(f"unknown embedding method {method!r}; choose from {EMBED_METHODS}")


def _write_matrix(path, M):
    np.ascontiguousarray(M, dtype="<f8").tofile(path)


def _read_matrix(path, rows, cols):
    return np.fromfile(path, dtype="<f8").reshape(rows, cols)


def save_embeddings(embeddings: Sequence, directory, method: str = "") -> None:
    """Write a JSON manifest plus one row-major float64 file per matrix."""
    os.makedirs(directory, exist_ok=True)
    entries = []
    for t, e in enumerate(embeddings):
        if isinstance(e, Embedding):
            name = f"embedding_{t:05d}.bin"
            _write_matrix(os.path.join(directory, name), e.positions)
            entries.append({"file": name, "rows": e.positions.shape[0],
                            "signature": [e.signature.d_plus, e.signature.d_minus],
                            "snapshot_id": e.snapshot_id})
        else:
            src, dst = f"sources_{t:05d}.bin", f"targets_{t:05d}.bin"
            _write_matrix(os.path.join(directory, src), e.sources)
            _write_matrix(os.path.join(directory, dst), e.targets)
            entries.append({"sources": src, "targets": dst, "rows": e.sources.shape[0],
                            "target_rows": e.targets.shape[0], "snapshot_id": e.snapshot_id})
    first = embeddings[0]
    manifest = {
        "format": "rdpglink-embeddings",
        "version": 1,
        "n": entries[0]["rows"],
        "d": first.d,
        "T": len(embeddings),
        "method": method,
        "directed": not isinstance(first, Embedding),
        "snapshots": entries,
    }
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)


def load_embeddings(directory) -> list:
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    d = manifest["d"]
    out = []
    for entry in manifest["snapshots"]:
        if manifest["directed"]:
            X = _read_matrix(os.path.join(directory, entry["sources"]), entry["rows"], d)
            Y = _read_matrix(os.path.join(directory, entry["targets"]), entry["target_rows"], d)
            out.append(DirectedEmbedding(X, Y, entry["snapshot_id"]))
        else:
            X = _read_matrix(os.path.join(directory, entry["file"]), entry["rows"], d)
            out.append(Embedding(X, Signature(*entry["signature"]), entry["snapshot_id"]))
    return out


def save_cosie(c: CosieDecomposition, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    _write_matrix(os.path.join(directory, "basis.bin"), c.basis)
    _write_matrix(os.path.join(directory, "weights.bin"), c.weights.reshape(c.T, -1))
    manifest = {"format": "rdpglink-cosie", "version": 1, "rows": c.basis.shape[0], "d": c.basis.shape[1],
                "T": c.T, "right_rows": None}
    if c.right_basis is not None:
        _write_matrix(os.path.join(directory, "right_basis.bin"), c.right_basis)
        manifest["right_rows"] = c.right_basis.shape[0]
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)


def load_cosie(directory) -> CosieDecomposition:
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        m = json.load(fh)
    d = m["d"]
    basis = _read_matrix(os.path.join(directory, "basis.bin"), m["rows"], d)
    weights = _read_matrix(os.path.join(directory, "weights.bin"), m["T"], d * d).reshape(m["T"], d, d)
    right = None
    if m["right_rows"] is not None:
        right = _read_matrix(os.path.join(directory, "right_basis.bin"), m["right_rows"], d)
    return CosieDecomposition(basis, weights, right)
