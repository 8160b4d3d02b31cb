import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from rdpglink.errors import UndefinedMetricError
from rdpglink.evaluate import (
    EvalReport,
    SubsampleScheme,
    _unrank,
    auc_difference_ci,
    evaluate_method,
    positive_pairs,
    roc_auc,
    subsample_negatives,
)
from rdpglink import evaluate as ev_mod
from rdpglink.graph import GraphKind, SnapshotSeries, ever_active
from rdpglink.score import ScoreMatrix
from rdpglink.simulate import SeasonalSbmConfig, seasonal_sbm

from conftest import random_series


def pairwise_auc(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    total = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return total / (len(pos) * len(neg))


def test_auc_examples():
    assert roc_auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert roc_auc([0.3] * 6, [1, 0, 1, 0, 0, 1]) == 0.5
    scores = [0.1, 0.4, 0.4, 0.35, 0.8, 0.7, 0.2, 0.4, 0.9, 0.05, 0.6, 0.35]
    labels = [0, 1, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1]
    assert abs(roc_auc(scores, labels) - pairwise_auc(scores, labels)) < 1e-12
    with pytest.raises(UndefinedMetricError):
        roc_auc([1, 2], [1, 1])


@given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=40))
def test_auc_matches_pairwise_oracle(data):
    scores, labels = zip(*data)
    if all(labels) or not any(labels):
        return
    assert abs(roc_auc(scores, labels) - pairwise_auc(scores, labels)) < 1e-12


@given(st.integers(0, 10_000))
def test_auc_invariant_to_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    s = rng.standard_normal(30)
    y = rng.random(30) < 0.4
    if y.all() or not y.any():
        return
    assert roc_auc(s, y) == roc_auc(np.exp(3 * s) + 1, y)
    assert abs(roc_auc(-s, y) - (1 - roc_auc(s, y))) < 1e-12


def toy_series():
    # 6 nodes; every zero pair of the last snapshot was linked at some earlier time
    n = 6
    full = np.ones((n, n)) - np.eye(n)
    A_last = np.zeros((n, n))
    A_last[0, 1] = A_last[1, 0] = 1
    return SnapshotSeries("undirected", (full, A_last), tuple(range(n)))


def test_scheme2_saturates_when_everything_was_active():
    s = toy_series()
    for count in (1, 3, 14):
        neg = subsample_negatives(s[1], s, SubsampleScheme("zeros_plus_ever_active", count, 0), t=2)
        assert len(neg) == 14


def test_scheme1_full_zero_set():
    s = random_series(8, 1, 0.3, seed=1)
    A = s[0].toarray()
    zeros = {(i, j) for i in range(8) for j in range(i + 1, 8) if A[i, j] == 0}
    neg = subsample_negatives(s[0], s, SubsampleScheme(sample_count=len(zeros)))
    assert set(zip(neg.rows, neg.cols)) == zeros and not neg.truncated
    over = subsample_negatives(s[0], s, SubsampleScheme(sample_count=len(zeros) + 5))
    assert over.truncated and len(over) == len(zeros)


@given(st.integers(0, 10_000), st.sampled_from(["undirected", "directed", "bipartite"]))
def test_scheme2_is_scheme1_union_ever_active(seed, kind):
    s = random_series(6, 4, 0.3, seed=seed, kind=kind, n2=5 if kind == "bipartite" else None)
    A = s[3]
    one = subsample_negatives(A, s, SubsampleScheme("uniform_zeros", 4, seed), t=4)
    two = subsample_negatives(A, s, SubsampleScheme("zeros_plus_ever_active", 4, seed), t=4)
    act = ever_active(s).toarray()
    Ad = A.toarray()
    ever = set()
    for i in range(Ad.shape[0]):
        for j in range(Ad.shape[1]):
            ok = i < j if kind == "undirected" else (i != j if kind == "directed" else True)
            if ok and act[i, j] and not Ad[i, j]:
                ever.add((i, j))
    S1, S2 = set(zip(one.rows, one.cols)), set(zip(two.rows, two.cols))
    assert S2 == S1 | ever
    assert all(Ad[i, j] == 0 for i, j in S2)


@pytest.mark.parametrize("kind,shape", [("undirected", (7, 7)), ("directed", (6, 6)), ("bipartite", (4, 5))])
def test_unrank_enumerates_candidate_pairs(kind, shape):
    kind = GraphKind(kind)
    space = {"undirected": 21, "directed": 30, "bipartite": 20}[kind.value]
    r, c = _unrank(kind, shape, np.arange(space))
    mask = ev_mod._candidate_mask(kind, shape)
    assert sorted(zip(r, c)) == sorted(zip(*np.nonzero(mask)))


def test_rejection_sampler_path(monkeypatch):
    monkeypatch.setattr(ev_mod, "_ENUMERATE_LIMIT", 10)
    s = random_series(30, 1, 0.1, seed=2)
    neg = subsample_negatives(s[0], s, SubsampleScheme(sample_count=50, seed=3))
    assert len(set(zip(neg.rows, neg.cols))) == 50
    A = s[0].toarray()
    assert all(A[i, j] == 0 and i < j for i, j in zip(neg.rows, neg.cols))


def test_default_sample_count():
    s = random_series(20, 1, 0.05, seed=4)
    pos = len(positive_pairs(s[0], GraphKind.UNDIRECTED)[0])
    neg = subsample_negatives(s[0], s, SubsampleScheme())
    assert len(neg) == min(10 * pos, 190 - pos)


def test_evaluate_oracle_scorer_and_null_scorer():
    s = random_series(50, 3, 0.05, seed=5)
    exact = evaluate_method([ScoreMatrix(A.toarray()) for A in s.snapshots], s, SubsampleScheme(seed=1))
    assert all(a == 1.0 for _, a in exact.per_snapshot_auc)
    rng = np.random.default_rng(6)
    null = evaluate_method([ScoreMatrix(rng.random((50, 50))) for _ in range(3)], s,
                           SubsampleScheme(sample_count=1000, seed=2))
    assert abs(null.mean_auc - 0.5) < 0.05


def test_evaluate_label_swap_and_determinism():
    s = random_series(20, 2, 0.2, seed=7)
    rng = np.random.default_rng(8)
    S = [ScoreMatrix(rng.random((20, 20))) for _ in range(2)]
    sch = SubsampleScheme(sample_count=190, seed=3)  # all zeros: exact AUC
    r = evaluate_method(S, s, sch)
    r2 = evaluate_method(S, s, sch)
    assert r.to_json() == r2.to_json()
    # swapping the classes within each snapshot maps AUC to 1 - AUC
    for (t, auc), A, M in zip(r.per_snapshot_auc, s.snapshots, S):
        Ad = A.toarray()
        iu = np.triu_indices(20, 1)
        swapped = roc_auc(M.dense()[iu], Ad[iu] == 0)
        assert abs(swapped - (1 - auc)) < 1e-12


def test_report_roundtrip(tmp_path):
    s = random_series(10, 2, 0.3, seed=9)
    r = evaluate_method([ScoreMatrix(np.ones((10, 10)))] * 2, s, SubsampleScheme(seed=1), first_t=5, method_tag="x")
    assert [t for t, _ in r.per_snapshot_auc] == [5, 6]
    r.write_json(tmp_path / "r.json")
    back = EvalReport.read_json(tmp_path / "r.json")
    assert back.to_json() == r.to_json()
    r.write_csv(tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "t,auc" and lines[1].startswith("5,")


def test_ci_self_difference_and_degenerate():
    s = random_series(15, 2, 0.2, seed=10)
    rng = np.random.default_rng(11)
    A = [ScoreMatrix(rng.random((15, 15))) for _ in range(2)]
    for iv in auc_difference_ci(A, A, s, SubsampleScheme(sample_count=20), m=10):
        assert iv.mean == 0 and iv.contains(0.0)
    B = [ScoreMatrix(rng.random((15, 15))) for _ in range(2)]
    saturated = SubsampleScheme(sample_count=105)
    exact = [evaluate_method(A, s, saturated).aucs()[k] - evaluate_method(B, s, saturated).aucs()[k] for k in range(2)]
    for iv, e in zip(auc_difference_ci(A, B, s, saturated, m=5), exact):
        assert iv.half_width == 0 and abs(iv.mean - e) < 1e-12
    with pytest.raises(ValueError):
        auc_difference_ci(A, B, s, saturated, m=1)


def test_ci_half_width_shrinks_with_m():
    series, truth = seasonal_sbm(SeasonalSbmConfig(n=60, T=3, seed=1))
    rng = np.random.default_rng(12)
    A = [ScoreMatrix(truth.probabilities(t)) for t in (1, 2, 3)]
    B = [ScoreMatrix(truth.probabilities(t) + 0.5 * rng.standard_normal((60, 60))) for t in (1, 2, 3)]
    sch = SubsampleScheme(sample_count=200, seed=4)
    w25 = [iv.half_width for iv in auc_difference_ci(A, B, series, sch, m=25)]
    w100 = [iv.half_width for iv in auc_difference_ci(A, B, series, sch, m=100)]
    for a, b in zip(w25, w100):
        assert b < a
        assert 0.25 < b / a < 1.0  # about 1/2 = sqrt(25/100)
