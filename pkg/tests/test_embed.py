import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from rdpglink.embed import (
    EUCLIDEAN,
    INDEFINITE,
    Embedding,
    Signature,
    ase,
    dase,
    embed_series,
    load_cosie,
    load_embeddings,
    mase,
    omnibus,
    omnibus_matrix,
    save_cosie,
    save_embeddings,
)
from rdpglink.errors import InfeasibleSizeError
from rdpglink.graph import GraphKind, SnapshotSeries
from rdpglink.simulate import SeasonalSbmConfig, seasonal_sbm

from conftest import random_orthogonal, random_series


def test_ase_two_cycle_d1():
    e = ase(np.array([[0.0, 1.0], [1.0, 0.0]]), 1)
    np.testing.assert_allclose(np.abs(e.positions[:, 0]), [2 ** -0.5] * 2, atol=1e-12)
    np.testing.assert_allclose(e.gram(EUCLIDEAN), np.full((2, 2), 0.5), atol=1e-12)
    assert e.signature == Signature(1, 0)


def test_ase_null_graph():
    e = ase(np.zeros((4, 4)), 2)
    np.testing.assert_array_equal(e.gram(EUCLIDEAN), np.zeros((4, 4)))


def test_ase_noiseless_rank2(rng):
    Q = np.linalg.qr(rng.standard_normal((10, 2)))[0]
    X = Q * np.array([2.0, 1.0])
    P = X @ X.T
    e = ase(P, 2)
    np.testing.assert_allclose(e.gram(), P, atol=1e-8)


def test_ase_signature_columns_positive_first(rng):
    # B with a negative eigenvalue: heterophilic two-block SBM probabilities
    z = np.repeat([0, 1], 10)
    B = np.array([[0.1, 0.9], [0.9, 0.1]])
    P = B[z][:, z]
    e = ase(P, 2)
    assert e.signature == Signature(1, 1)
    np.testing.assert_allclose(e.gram(INDEFINITE), P, atol=1e-8)
    assert not np.allclose(e.gram(EUCLIDEAN), P, atol=1e-3)
    L, R = e.factors(INDEFINITE)
    np.testing.assert_allclose(L @ R.T, P, atol=1e-8)
    with pytest.raises(ValueError):
        e.factors("cosine")


def test_dase_examples():
    e = dase(np.eye(2), 2)
    np.testing.assert_allclose(e.gram(), np.eye(2), atol=1e-10)
    A = np.zeros((3, 3))
    A[0, 1] = 1
    np.testing.assert_allclose(dase(A, 1).gram(), A, atol=1e-12)


def test_dase_matches_dense_svd(rng):
    A = (rng.random((15, 10)) < 0.4).astype(float)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    np.testing.assert_allclose(dase(A, 10).gram(), (U * s) @ Vt, atol=1e-8)


def test_dase_symmetric_input(rng):
    A = random_series(12, 1, 0.4, seed=4)[0]
    G = dase(A, 3).gram()
    np.testing.assert_allclose(G, G.T, atol=1e-8)


def test_omnibus_single_snapshot_is_ase():
    s = random_series(15, 1, 0.3, seed=5)
    np.testing.assert_allclose(omnibus(s, 3)[0].gram(), ase(s[0], 3).gram(), atol=1e-8)


def test_omnibus_identical_snapshots():
    s = random_series(12, 1, 0.3, seed=6)
    s2 = s.with_snapshots([s[0], s[0]])
    a, b = omnibus(s2, 3)
    np.testing.assert_allclose(a.positions, b.positions, atol=1e-8)


def test_omnibus_matrix_dense_oracle():
    s = random_series(8, 3, 0.4, seed=7)
    M = omnibus_matrix(s).toarray()
    D = s.dense()
    oracle = np.zeros((24, 24))
    for a in range(3):
        for b in range(3):
            oracle[a * 8:(a + 1) * 8, b * 8:(b + 1) * 8] = (D[a] + D[b]) / 2
    np.testing.assert_array_equal(M, oracle)
    np.testing.assert_array_equal(M, M.T)


def test_omnibus_operator_matches_explicit_matrix():
    s = random_series(10, 3, 0.3, seed=8)
    emb = omnibus(s, 2)
    X = np.vstack([e.positions for e in emb])
    e_full = ase(omnibus_matrix(s), 2)
    np.testing.assert_allclose(X @ X.T, e_full.positions @ e_full.positions.T, atol=1e-8)


def test_omnibus_cap():
    s = random_series(10, 3, 0.3, seed=8)
    with pytest.raises(InfeasibleSizeError):
        omnibus(s, 2, cap=20)


def test_omnibus_directed():
    s = random_series(9, 2, 0.3, seed=9, kind="directed")
    embs = omnibus(s, 2)
    assert len(embs) == 2 and embs[0].sources.shape == (9, 2)


def test_mase_single_graph():
    s = random_series(12, 1, 0.4, seed=10)
    c = mase(s, 3)
    G = ase(s[0], 3).positions
    Gamma = G / np.linalg.norm(G, axis=0)
    np.testing.assert_allclose(c.basis @ c.basis.T, Gamma @ Gamma.T, atol=1e-8)


def test_mase_noiseless_cosie(rng):
    X = np.linalg.qr(rng.standard_normal((20, 3)))[0]
    mats = []
    for _ in range(3):
        R = rng.standard_normal((3, 3))
        mats.append(X @ (R + R.T + 6 * np.eye(3)) @ X.T)
    fake = SnapshotSeries.__new__(SnapshotSeries)
    object.__setattr__(fake, "kind", GraphKind.UNDIRECTED)
    object.__setattr__(fake, "snapshots", tuple(sp.csr_matrix(M) for M in mats))
    object.__setattr__(fake, "row_labels", tuple(range(20)))
    object.__setattr__(fake, "col_labels", tuple(range(20)))
    c = mase(fake, 3)
    for t, M in enumerate(mats):
        np.testing.assert_allclose(c.probabilities(t), M, atol=1e-8)
    np.testing.assert_allclose(c.basis.T @ c.basis, np.eye(3), atol=1e-8)


@given(st.integers(0, 10_000))
def test_mase_orthonormal_and_order_invariant(seed):
    s = random_series(14, 3, 0.35, seed=seed)
    c = mase(s, 2)
    np.testing.assert_allclose(c.basis.T @ c.basis, np.eye(2), atol=1e-8)
    rev = mase(s.with_snapshots(s.snapshots[::-1]), 2)
    # the projection is order invariant unless the singular values are nearly tied
    gap = np.linalg.svd(np.hstack([ase(A, 2).positions / np.maximum(np.linalg.norm(ase(A, 2).positions, axis=0), 1e-300)
                                   for A in s.snapshots]), compute_uv=False)
    if gap[1] - gap[2] > 1e-3:
        np.testing.assert_allclose(c.basis @ c.basis.T, rev.basis @ rev.basis.T, atol=1e-6)


def test_mase_directed():
    s = random_series(10, 3, 0.3, seed=11, kind="bipartite", n2=7)
    c = mase(s, 2)
    assert c.basis.shape == (10, 2) and c.right.shape == (7, 2)
    np.testing.assert_allclose(c.right.T @ c.right, np.eye(2), atol=1e-8)


def test_embed_series_identical_snapshots():
    s = random_series(10, 1, 0.4, seed=12)
    s3 = s.with_snapshots([s[0]] * 3)
    grams = [e.gram() for e in embed_series(s3, 2)]
    for G in grams[1:]:
        np.testing.assert_allclose(G, grams[0], atol=1e-12)
    np.testing.assert_allclose(embed_series(s, 2, "omnibus")[0].gram(), ase(s[0], 2).gram(), atol=1e-8)


def test_embed_series_recovers_sbm_blocks():
    series, truth = seasonal_sbm(SeasonalSbmConfig(n=200, K=5, T=3, seed=3))
    for t, e in enumerate(embed_series(series, 5), start=1):
        z = truth.allocations[:, truth.phase(t)]
        G = e.gram().copy()
        np.fill_diagonal(G, np.nan)
        for a in range(5):
            for b in range(5):
                blk = np.ix_(z == a, z == b)
                if blk[0].size and blk[1].size:
                    assert abs(np.nanmean(G[blk]) - truth.B[a, b]) < 0.1


@given(st.integers(0, 10_000))
def test_gram_invariant_to_rotation(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((8, 3))
    Q = random_orthogonal(3, rng)
    a = Embedding(X, Signature(3, 0))
    b = Embedding(X @ Q, Signature(3, 0))
    np.testing.assert_allclose(a.gram(), b.gram(), atol=1e-10)


def test_embedding_persistence(tmp_path):
    s = random_series(9, 3, 0.4, seed=13)
    embs = embed_series(s, 2)
    save_embeddings(embs, tmp_path / "e", "individual-ase")
    back = load_embeddings(tmp_path / "e")
    for a, b in zip(embs, back):
        np.testing.assert_array_equal(a.positions, b.positions)
        assert a.signature == b.signature
    d = random_series(9, 2, 0.4, seed=13, kind="directed")
    dembs = embed_series(d, 2, "individual-dase")
    save_embeddings(dembs, tmp_path / "d")
    for a, b in zip(dembs, load_embeddings(tmp_path / "d")):
        np.testing.assert_array_equal(a.targets, b.targets)
    c = mase(s, 2)
    save_cosie(c, tmp_path / "c")
    c2 = load_cosie(tmp_path / "c")
    np.testing.assert_array_equal(c.weights, c2.weights)
    np.testing.assert_array_equal(c.basis, c2.basis)
