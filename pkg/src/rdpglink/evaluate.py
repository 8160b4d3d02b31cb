"""AUC evaluation with subsampled negative classes."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.stats import norm, rankdata

from .errors import UndefinedMetricError
from .graph import GraphKind, SnapshotSeries, ever_active

__all__ = [
    "roc_auc",
    "SubsampleScheme",
    "NegativeSample",
    "subsample_negatives",
    "positive_pairs",
    "EvalReport",
    "evaluate_method",
    "DifferenceInterval",
    "auc_difference_ci",
    "UNIFORM_ZEROS",
    "ZEROS_PLUS_EVER_ACTIVE",
]

UNIFORM_ZEROS = "uniform_zeros"
ZEROS_PLUS_EVER_ACTIVE = "zeros_plus_ever_active"
_ENUMERATE_LIMIT = 20_000_000


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Tied scores receive midranks, so each tied positive/negative pair counts
    one half.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative")
    ranks = rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class SubsampleScheme:
    """Negative-class construction.

    ``sample_count=None`` means min(10 * positives, available zeros) for each
    snapshot. For the ever-active variant the random part uses the same
    count as the uniform variant.
    """

    variant: str = UNIFORM_ZEROS
    sample_count: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.variant not in (UNIFORM_ZEROS, ZEROS_PLUS_EVER_ACTIVE):
            raise ValueError(f"unknown subsampling variant {self.variant!r}")
        if self.sample_count is not None and self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")

    def with_seed(self, seed: int) -> "SubsampleScheme":
        return SubsampleScheme(self.variant, self.sample_count, int(seed))


@dataclass(frozen=True)
class NegativeSample:
    rows: np.ndarray
    cols: np.ndarray
    requested: int
    truncated: bool

    def __len__(self):
        return self.rows.size


def _pair_space(kind: GraphKind, shape):
    n1, n2 = shape
    if kind is GraphKind.UNDIRECTED:
        return n1 * (n1 - 1) // 2
    if kind is GraphKind.DIRECTED:
        return n1 * (n1 - 1)
    return n1 * n2


def _unrank(kind, shape, idx):
    # linear index over candidate pairs -> (row, col)
    n1, n2 = shape
    idx = np.asarray(idx, dtype=np.int64)
    if kind is GraphKind.UNDIRECTED:
        # row i owns n1-1-i pairs starting at i*(2*n1-i-1)/2
        i = np.floor((2 * n1 - 1 - np.sqrt((2 * n1 - 1) ** 2 - 8.0 * idx)) / 2).astype(np.int64)
        start = i * (2 * n1 - i - 1) // 2
        over = idx >= start + (n1 - 1 - i)
        i = i + over
        under = idx < i * (2 * n1 - i - 1) // 2
        i = i - under
        start = i * (2 * n1 - i - 1) // 2
        return i, idx - start + i + 1
    if kind is GraphKind.DIRECTED:
        i, r = np.divmod(idx, n1 - 1)
        return i, r + (r >= i)
    return np.divmod(idx, n2)


def _candidate_mask(kind, shape):
    n1, n2 = shape
    if kind is GraphKind.UNDIRECTED:
        return np.triu(np.ones(shape, dtype=bool), k=1)
    if kind is GraphKind.DIRECTED:
        return ~np.eye(n1, dtype=bool)
    return np.ones(shape, dtype=bool)


def positive_pairs(A, kind: GraphKind):
    """Observed links of A as (rows, cols), one entry per candidate pair."""
    coo = sp.coo_matrix(A)
    r, c = coo.row, coo.col
    if kind is GraphKind.UNDIRECTED:
        keep = r < c
    elif kind is GraphKind.DIRECTED:
        keep = r != c
    else:
        keep = np.ones(r.size, dtype=bool)
    order = np.lexsort((c[keep], r[keep]))
    return r[keep][order].astype(np.int64), c[keep][order].astype(np.int64)


def _snapshot_rng(seed, t):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(t)])))


def _uniform_zeros(A, kind, count, rng):
    shape = A.shape
    space = _pair_space(kind, shape)
    A = sp.csr_matrix(A)
    n_pos = len(positive_pairs(A, kind)[0])
    n_zero = space - n_pos
    truncated = count > n_zero
    count = min(count, n_zero)
    if space <= _ENUMERATE_LIMIT or count * 2 >= n_zero:
        zero = _candidate_mask(kind, shape) & (A.toarray() == 0)
        rows, cols = np.nonzero(zero)
        pick = np.sort(rng.choice(rows.size, size=count, replace=False))
        return rows[pick].astype(np.int64), cols[pick].astype(np.int64), truncated
    # rejection sampling over linear pair indices for very large graphs
    chosen = np.empty(0, dtype=np.int64)
    while chosen.size < count:
        draw = rng.integers(0, space, size=2 * (count - chosen.size) + 16)
        r, c = _unrank(kind, shape, draw)
        draw = draw[np.asarray(A[r, c]).ravel() == 0]
        chosen = np.unique(np.r_[chosen, draw])
    chosen = np.sort(rng.choice(chosen, size=count, replace=False))
    r, c = _unrank(kind, shape, chosen)
    return r, c, truncated


def subsample_negatives(A_t, history: SnapshotSeries, scheme: SubsampleScheme, t: int = 0,
                        active=None) -> NegativeSample:
    """Negative pairs for snapshot ``A_t``.

    The uniform part is a sample without replacement from the zero pairs of
    A_t, drawn from a stream keyed on (scheme.seed, t). The ever-active
    variant adds every zero pair of A_t that is linked somewhere in
    ``history``. Output pairs are sorted by (row, col).
    """
    kind = history.kind
    A_t = sp.csr_matrix(A_t)
    if scheme.sample_count is None:
        n_pos = len(positive_pairs(A_t, kind)[0])
        requested = min(max(1, 10 * n_pos), _pair_space(kind, A_t.shape) - n_pos)
    else:
        requested = scheme.sample_count
    rows, cols, truncated = _uniform_zeros(A_t, kind, requested, _snapshot_rng(scheme.seed, t))
    if scheme.variant == ZEROS_PLUS_EVER_ACTIVE:
        if active is None:
            active = ever_active(history)
        extra = sp.csr_matrix(active) - active.multiply(A_t)
        extra.eliminate_zeros()
        er, ec = positive_pairs(extra, kind)
        n2 = A_t.shape[1]
        keys = np.unique(np.r_[rows * n2 + cols, er * n2 + ec])
        rows, cols = np.divmod(keys, n2)
    return NegativeSample(rows.astype(np.int64), cols.astype(np.int64), requested, bool(truncated))


@dataclass
class EvalReport:
    method_tag: str
    scheme: SubsampleScheme
    per_snapshot_auc: list  # (t, auc) with 1-based t
    positives: list
    negatives: list
    truncated: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def mean_auc(self) -> float:
        return float(np.mean([a for _, a in self.per_snapshot_auc]))

    def aucs(self) -> np.ndarray:
        return np.array([a for _, a in self.per_snapshot_auc])

    def to_dict(self) -> dict:
        return {
            "method_tag": self.method_tag,
            "scheme": asdict(self.scheme),
            "per_snapshot_auc": [[int(t), float(a)] for t, a in self.per_snapshot_auc],
            "mean_auc": self.mean_auc,
            "positives": [int(v) for v in self.positives],
            "negatives": [int(v) for v in self.negatives],
            "truncated": [bool(v) for v in self.truncated],
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,auc\n")
            for t, a in self.per_snapshot_auc:
                fh.write(f"{int(t)},{float(a):.17g}\n")

    @classmethod
    def from_dict(cls, doc) -> "EvalReport":
        return cls(doc["method_tag"], SubsampleScheme(**doc["scheme"]),
                   [tuple(x) for x in doc["per_snapshot_auc"]], doc["positives"], doc["negatives"],
                   doc.get("truncated", []), doc.get("notes", {}))

    @classmethod
    def read_json(cls, path) -> "EvalReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _snapshot_auc(score, A_t, history, scheme, t, active):
    kind = history.kind
    pr, pc = positive_pairs(A_t, kind)
    neg = subsample_negatives(A_t, history, scheme, t, active)
    s = np.r_[score.at(pr, pc), score.at(neg.rows, neg.cols)]
    labels = np.r_[np.ones(pr.size, dtype=bool), np.zeros(len(neg), dtype=bool)]
    return roc_auc(s, labels), pr.size, len(neg), neg.truncated


def evaluate_method(scores: Sequence, test: SnapshotSeries, scheme: SubsampleScheme,
                    history: SnapshotSeries | None = None, first_t: int = 1,
                    method_tag: str | None = None) -> EvalReport:
    """AUC per test snapshot.

    ``scores[k]`` scores ``test[k]``, whose 1-based index in the full series
    is ``first_t + k``. ``history`` (default ``test``) is the window that
    defines ever-active pairs.
    """
    if len(scores) != test.T:
        raise ValueError(f"got {len(scores)} score matrices for {test.T} test snapshots")
    history = test if history is None else history
    active = ever_active(history) if scheme.variant == ZEROS_PLUS_EVER_ACTIVE else None
    out, pos, neg, trunc = [], [], [], []
    for k, (score, A) in enumerate(zip(scores, test.snapshots)):
        t = first_t + k
        auc, p, q, cut = _snapshot_auc(score, A, history, scheme, t, active)
        out.append((t, auc))
        pos.append(p)
        neg.append(q)
        trunc.append(cut)
    tag = method_tag if method_tag is not None else (scores[0].method_tag if scores else "")
    return EvalReport(tag, scheme, out, pos, neg, trunc)


@dataclass(frozen=True)
class DifferenceInterval:
    t: int
    mean: float
    sd: float
    lower: float
    upper: float
    m: int

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def repetition_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence([int(seed), 0x5EED, int(r)]).generate_state(1)[0])


def auc_difference_ci(scores_a: Sequence, scores_b: Sequence, test: SnapshotSeries, scheme: SubsampleScheme,
                      m: int = 100, level: float = 0.95, history: SnapshotSeries | None = None,
                      first_t: int = 1) -> list:
    """Normal-approximation intervals for AUC(a) - AUC(b) per test snapshot.

    Each of the ``m`` repetitions draws one negative sample per snapshot
    (shared by both methods) and records the paired difference; the interval
    is mean +- z * sd / sqrt(m).
    """
    if m < 2:
        raise ValueError("need at least two repetitions")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    history = test if history is None else history
    active = ever_active(history) if scheme.variant == ZEROS_PLUS_EVER_ACTIVE else None
    diffs = np.empty((m, test.T))
    for r in range(m):
        rep = scheme.with_seed(repetition_seed(scheme.seed, r))
        for k, A in enumerate(test.snapshots):
            t = first_t + k
            a = _snapshot_auc(scores_a[k], A, history, rep, t, active)[0]
            b = _snapshot_auc(scores_b[k], A, history, rep, t, active)[0]
            diffs[r, k] = a - b
    z = float(norm.ppf(0.5 + level / 2.0))
    mean = diffs.mean(axis=0)
    sd = diffs.std(axis=0, ddof=1)
    half = z * sd / math.sqrt(m)
    return [DifferenceInterval(first_t + k, float(mean[k]), float(sd[k]), float(mean[k] - half[k]),
                               float(mean[k] + half[k]), m) for k in range(test.T)]
