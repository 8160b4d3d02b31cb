"""Link-score matrices from embeddings, forecasts and neighbourhood heuristics."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .align import GpaResult, gpa, gpa_directed
from .embed import EUCLIDEAN, INDEFINITE, CosieDecomposition, DirectedEmbedding, Embedding, ase, dase
from .errors import InfeasibleSizeError, StructureError
from .forecast import DEFAULT_PERIOD, SariBounds, fit_forecast
from .graph import GraphKind, SnapshotSeries, collapse_weighted, ever_active, uniform_weights

__all__ = [
    "ScoreMatrix",
    "StreamState",
    "score_collapsed",
    "score_aip",
    "score_ipa",
    "score_cosie_aip",
    "score_cosie_ipa",
    "score_predicted_adjacency",
    "predicted_adjacency",
    "score_pip",
    "score_pip_embeddings",
    "score_ipp_embedding",
    "score_ipp_cosie",
    "stream_init",
    "stream_update",
    "baseline_scores",
    "baseline_aip",
    "write_score_triplets",
    "read_score_triplets",
    "save_score_matrix",
    "load_score_matrix",
    "DENSE_LIMIT",
    "MAX_FORECAST_SERIES",
]

DENSE_LIMIT = 20_000
MAX_FORECAST_SERIES = 1_000_000


@dataclass(frozen=True)
class ScoreMatrix:
    """Link scores for one prediction horizon.

    Either ``values`` holds the dense matrix, or ``left``/``right`` hold
    factors with scores ``left @ right.T`` evaluated on demand.
    """

    values: np.ndarray | None
    horizon: int | None = None
    method_tag: str = ""
    left: np.ndarray | None = None
    right: np.ndarray | None = None
    info: dict = field(default_factory=dict, compare=False)

    @property
    def shape(self):
        if self.values is not None:
            return self.values.shape
        return (self.left.shape[0], self.right.shape[0])

    def at(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if self.values is not None:
            return self.values[rows, cols]
        return np.einsum("ij,ij->i", self.left[rows], self.right[cols])

    def dense(self) -> np.ndarray:
        if self.values is not None:
            return self.values
        return self.left @ self.right.T

    def relabel(self, horizon=None, method_tag=None) -> "ScoreMatrix":
        return ScoreMatrix(self.values, horizon if horizon is not None else self.horizon,
                           method_tag if method_tag is not None else self.method_tag,
                           self.left, self.right, self.info)


def _from_factors(left, right, horizon=None, tag="") -> ScoreMatrix:
    if max(left.shape[0], right.shape[0]) <= DENSE_LIMIT:
        return ScoreMatrix(left @ right.T, horizon, tag)
    return ScoreMatrix(None, horizon, tag, left, right)


def _embed_one(A, d, symmetric, metric=INDEFINITE, **solver):
    if symmetric:
        return ase(A, d, **solver).factors(metric)
    e = dase(A, d, **solver)
    return e.sources, e.targets


def score_collapsed(series: SnapshotSeries, d: int, weights=None, horizon=None, metric: str = INDEFINITE,
                    **solver) -> ScoreMatrix:
    """Scores from the embedding of the weighted collapsed adjacency matrix."""
    if weights is None:
        weights = uniform_weights(series.T)
    A = collapse_weighted(series, weights)
    L, R = _embed_one(A, d, series.kind is GraphKind.UNDIRECTED, metric, **solver)
    return _from_factors(L, R, horizon, "collapsed")


def score_aip(embeddings: Sequence, horizon=None, metric: str = INDEFINITE) -> ScoreMatrix:
    """Average of per-snapshot inner products; no alignment needed.

    ``metric`` selects x^T I(d+, d-) y (default) or the plain x^T y for
    undirected embeddings; directed embeddings always use X Y^T.
    """
    T = len(embeddings)
    pairs = [e.factors(metric) for e in embeddings]
    left = np.hstack([L for L, _ in pairs]) / np.sqrt(T)
    right = np.hstack([R for _, R in pairs]) / np.sqrt(T)
    return _from_factors(left, right, horizon, "aip")


def _align(embeddings):
    if len(embeddings) == 1:
        return list(embeddings)
    if isinstance(embeddings[0], DirectedEmbedding):
        return gpa_directed(embeddings)[1]
    res = gpa([e.positions for e in embeddings])
    return [Embedding(M, e.signature, e.snapshot_id) for M, e in zip(res.rotated, embeddings)]


def _aligned_metric(embeddings, aligned_by_rotation, metric):
    # orthogonal rotations do not preserve I(d+, d-), so rotated embeddings
    # only support the plain inner product
    if metric is None:
        return EUCLIDEAN if aligned_by_rotation else INDEFINITE
    if metric == INDEFINITE and aligned_by_rotation and any(
        isinstance(e, Embedding) and e.signature.d_minus for e in embeddings
    ):
        raise ValueError("the indefinite inner product is not preserved by orthogonal alignment")
    return metric


def score_ipa(embeddings: Sequence, alignment: GpaResult | None = None, align: bool = True,
              horizon=None, metric: str | None = None) -> ScoreMatrix:
    """Inner product of the averaged embedding.

    The embeddings are superimposed by GPA first unless ``align=False``
    (omnibus embeddings are already comparable) or a previous ``alignment``
    of undirected embeddings is supplied. After a rotation the plain inner
    product is used; unrotated embeddings default to x^T I(d+, d-) y.
    """
    rotated = alignment is not None or (align and len(embeddings) > 1)
    if alignment is not None:
        embs = [Embedding(M, e.signature, e.snapshot_id) for M, e in zip(alignment.rotated, embeddings)]
    elif align:
        embs = _align(embeddings)
    else:
        embs = list(embeddings)
    metric = _aligned_metric(embs, rotated, metric)
    if isinstance(embs[0], DirectedEmbedding):
        bar = DirectedEmbedding(np.mean([e.sources for e in embs], axis=0), np.mean([e.targets for e in embs], axis=0))
    else:
        bar = Embedding(np.mean([e.positions for e in embs], axis=0), embs[0].signature)
    left, right = bar.factors(metric)
    return _from_factors(left, right, horizon, "ipa")


def score_cosie_aip(c: CosieDecomposition, horizon=None) -> ScoreMatrix:
    S = np.mean([c.basis @ c.weights[t] @ c.right.T for t in range(c.T)], axis=0)
    return ScoreMatrix(S, horizon, "cosie-aip")


def score_cosie_ipa(c: CosieDecomposition, horizon=None) -> ScoreMatrix:
    R_bar = c.weights.mean(axis=0)
    return ScoreMatrix(c.basis @ R_bar @ c.right.T, horizon, "cosie-ipa")


def _pair_index(shape, symmetric, mask=None):
    n1, n2 = shape
    if symmetric:
        rows, cols = np.triu_indices(n1, k=1)
    elif n1 == n2:
        rows, cols = np.nonzero(~np.eye(n1, dtype=bool))
    else:
        rows, cols = np.indices(shape).reshape(2, -1)
    if mask is not None:
        keep = np.asarray(mask[rows, cols]).ravel().astype(bool)
        rows, cols = rows[keep], cols[keep]
    return rows, cols


def _check_series_count(count):
    if count > MAX_FORECAST_SERIES:
        raise InfeasibleSizeError(
            f"{count} per-pair time series exceed the cap of {MAX_FORECAST_SERIES}"
        )


def predicted_adjacency(series: SnapshotSeries, horizons: int = 1, s: int = DEFAULT_PERIOD,
                        bounds: SariBounds | None = None):
    """Per-pair SARI forecasts of the binary link series.

    Only pairs linked at least once get a model; the rest stay zero. Returns
    ``(matrices, diagnostics)`` with one forecast matrix per horizon.
    """
    symmetric = series.kind is GraphKind.UNDIRECTED
    active = ever_active(series)
    rows, cols = _pair_index(series.shape, symmetric, active.toarray())
    _check_series_count(rows.size)
    out = [np.zeros(series.shape) for _ in range(horizons)]
    diagnostics = {"series": int(rows.size), "degenerate": 0}
    if rows.size:
        Z = np.stack([np.asarray(A[rows, cols]).ravel() for A in series.snapshots], axis=1)
        fc, batch = fit_forecast(Z, horizons, s=s, bounds=bounds)
        diagnostics["degenerate"] = int(batch.degenerate.sum())
        for h in range(horizons):
            out[h][rows, cols] = fc[:, h]
            if symmetric:
                out[h][cols, rows] = fc[:, h]
    return out, diagnostics


def score_predicted_adjacency(series: SnapshotSeries, d: int, horizons: int = 1, s: int = DEFAULT_PERIOD,
                              bounds: SariBounds | None = None, metric: str = INDEFINITE, **solver) -> list:
    """Scores from the embedding of the forecast adjacency matrix, one per horizon."""
    mats, diagnostics = predicted_adjacency(series, horizons, s, bounds)
    symmetric = series.kind is GraphKind.UNDIRECTED
    out = []
    for h, M in enumerate(mats, start=1):
        L, R = _embed_one(M, d, symmetric, metric, **solver)
        sm = _from_factors(L, R, h, "collapsed-pred")
        sm.info.update(diagnostics)
        out.append(sm)
    return out


def score_pip(histories, horizons: int = 1, s: int = DEFAULT_PERIOD, bounds: SariBounds | None = None,
              symmetric: bool = True, pairs=None) -> list:
    """Per-pair forecasts of score histories.

    ``histories`` is a (T, n1, n2) array of per-snapshot scores. Pairs outside
    the optional boolean ``pairs`` mask (and the diagonal) keep their
    historical mean.
    """
    H = np.asarray(histories, dtype=np.float64)
    T, n1, n2 = H.shape
    rows, cols = _pair_index((n1, n2), symmetric, pairs)
    _check_series_count(rows.size)
    base = H.mean(axis=0)
    out = []
    if rows.size:
        Z = np.ascontiguousarray(H[:, rows, cols].T)
        fc, batch = fit_forecast(Z, horizons, s=s, bounds=bounds)
        degenerate = int(batch.degenerate.sum())
    else:
        fc, degenerate = np.zeros((0, horizons)), 0
    for h in range(horizons):
        S = base.copy()
        S[rows, cols] = fc[:, h]
        if symmetric:
            S[cols, rows] = fc[:, h]
        out.append(ScoreMatrix(S, h + 1, "pip", info={"series": int(rows.size), "degenerate": degenerate}))
    return out


def score_pip_embeddings(embeddings: Sequence, horizons: int = 1, s: int = DEFAULT_PERIOD,
                         bounds: SariBounds | None = None, pairs=None, metric: str = INDEFINITE) -> list:
    """PIP scores from the inner-product histories of per-snapshot embeddings."""
    H = np.stack([e.gram(metric) for e in embeddings])
    symmetric = isinstance(embeddings[0], Embedding)
    return score_pip(H, horizons, s, bounds, symmetric=symmetric, pairs=pairs)


def _forecast_matrices(mats, horizons, s, bounds):
    """Forecast every entry of a (T, a, b) stack; returns (horizons, a, b)."""
    M = np.asarray(mats, dtype=np.float64)
    T = M.shape[0]
    Z = np.ascontiguousarray(M.reshape(T, -1).T)
    _check_series_count(Z.shape[0])
    fc, _ = fit_forecast(Z, horizons, s=s, bounds=bounds)
    return fc.T.reshape((horizons,) + M.shape[1:])


def score_ipp_embedding(embeddings: Sequence, horizons: int = 1, s: int = DEFAULT_PERIOD,
                        bounds: SariBounds | None = None, align: bool = True, metric: str | None = None) -> list:
    """Inner products of per-coordinate forecasts of the (aligned) embeddings.

    The inner product follows the same rule as :func:`score_ipa`.
    """
    embs = _align(embeddings) if align else list(embeddings)
    metric = _aligned_metric(embs, align and len(embs) > 1, metric)
    Xf = _forecast_matrices([e.left for e in embs], horizons, s, bounds)
    if isinstance(embs[0], DirectedEmbedding):
        Yf = _forecast_matrices([e.right for e in embs], horizons, s, bounds)
        return [_from_factors(Xf[h], Yf[h], h + 1, "ipp") for h in range(horizons)]
    out = []
    for h in range(horizons):
        L, R = Embedding(Xf[h], embs[-1].signature).factors(metric)
        out.append(_from_factors(L, R, h + 1, "ipp"))
    return out


def score_ipp_cosie(c: CosieDecomposition, horizons: int = 1, s: int = DEFAULT_PERIOD,
                    bounds: SariBounds | None = None) -> list:
    """Scores X R_{T+h} Y^T with R forecast entrywise; cost independent of n."""
    Rf = _forecast_matrices(c.weights, horizons, s, bounds)
    return [ScoreMatrix(c.basis @ Rf[h] @ c.right.T, h + 1, "cosie-ipp") for h in range(horizons)]


@dataclass(frozen=True)
class StreamState:
    """Forgetting-factor running score: w_t = lam w_{t-1} + 1."""

    s: np.ndarray
    w: float
    lam: float
    metric: str = INDEFINITE

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("forgetting factor must lie in [0, 1]")

    def score(self, horizon=None) -> ScoreMatrix:
        return ScoreMatrix(self.s, horizon, f"stream-ff({self.lam:g})")


def stream_init(embedding, lam: float, metric: str = INDEFINITE) -> StreamState:
    return StreamState(embedding.gram(metric), 1.0, float(lam), metric)


def stream_update(state: StreamState, embedding) -> StreamState:
    """S_t = (1 - 1/w_t) S_{t-1} + (1/w_t) X_t X_t^T."""
    w = state.lam * state.w + 1.0
    G = embedding.gram(state.metric)
    return StreamState((1.0 - 1.0 / w) * state.s + G / w, w, state.lam, state.metric)


def baseline_scores(A, method: str, kind: GraphKind = GraphKind.UNDIRECTED) -> ScoreMatrix:
    """Common-neighbour heuristics: ``adamic-adar`` or ``jaccard``.

    Directed graphs use the neighbourhoods of the symmetrized graph.
    """
    kind = GraphKind(kind)
    if kind is GraphKind.BIPARTITE:
        raise StructureError("common-neighbour baselines are undefined for bipartite graphs")
    A = sp.csr_matrix(A, dtype=np.float64)
    if kind is GraphKind.DIRECTED:
        A = ((A + A.T) > 0).astype(np.float64)
    deg = np.asarray(A.sum(axis=1)).ravel()
    if method == "jaccard":
        common = (A @ A.T).toarray()
        union = deg[:, None] + deg[None, :] - common
        with np.errstate(invalid="ignore", divide="ignore"):
            S = np.where(union > 0, common / union, 0.0)
    elif method == "adamic-adar":
        inv_log = np.zeros_like(deg)
        big = deg > 1
        inv_log[big] = 1.0 / np.log(deg[big])
        S = (A @ sp.diags(inv_log) @ A.T).toarray()
    else:
        raise ValueError(f"unknown baseline {method!r}")
    return ScoreMatrix(S, None, f"baseline-{method}")


def baseline_aip(series: SnapshotSeries, method: str, horizon=None) -> ScoreMatrix:
    """Per-snapshot heuristic scores averaged over the series."""
    S = np.mean([baseline_scores(A, method, series.kind).values for A in series.snapshots], axis=0)
    return ScoreMatrix(S, horizon, f"baseline-{method}")


def write_score_triplets(score: ScoreMatrix, rows, cols, stream) -> None:
    """Write ``i j score`` lines for the requested pairs."""
    values = score.at(rows, cols)
    for i, j, v in zip(np.asarray(rows), np.asarray(cols), values):
        stream.write(f"{i} {j} {v:.17g}\n")


def read_score_triplets(stream, shape) -> ScoreMatrix:
    """Dense score matrix from ``i j score`` lines; pairs not listed are NaN."""
    S = np.full(shape, np.nan)
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {line_no}: expected 'i j score'")
        S[int(parts[0]), int(parts[1])] = float(parts[2])
    return ScoreMatrix(S)


def save_score_matrix(score: ScoreMatrix, directory) -> None:
    """Dense scores as a row-major float64 file plus a JSON manifest."""
    os.makedirs(directory, exist_ok=True)
    S = score.dense()
    np.ascontiguousarray(S, dtype="<f8").tofile(os.path.join(directory, "scores.bin"))
    manifest = {"format": "rdpglink-scores", "version": 1, "rows": S.shape[0], "cols": S.shape[1],
                "horizon": score.horizon, "method_tag": score.method_tag, "file": "scores.bin"}
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)


def load_score_matrix(directory) -> ScoreMatrix:
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        m = json.load(fh)
    S = np.fromfile(os.path.join(directory, m["file"]), dtype="<f8").reshape(m["rows"], m["cols"])
    return ScoreMatrix(S, m["horizon"], m["method_tag"])
