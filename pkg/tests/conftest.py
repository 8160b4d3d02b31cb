import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import HealthCheck, settings

from rdpglink.graph import GraphKind, SnapshotSeries

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_adjacency(n, p, rng, kind=GraphKind.UNDIRECTED, n2=None):
    kind = GraphKind(kind)
    n2 = n if n2 is None else n2
    A = (rng.random((n, n2)) < p).astype(float)
    if kind is GraphKind.UNDIRECTED:
        A = np.triu(A, 1)
        A = A + A.T
    elif kind is GraphKind.DIRECTED:
        np.fill_diagonal(A, 0)
    return A


def random_series(n, T, p=0.3, seed=0, kind=GraphKind.UNDIRECTED, n2=None):
    rng = np.random.default_rng(seed)
    kind = GraphKind(kind)
    mats = [sp.csr_matrix(random_adjacency(n, p, rng, kind, n2)) for _ in range(T)]
    rows = tuple(range(n))
    cols = None if kind.unipartite else tuple(range(n if n2 is None else n2))
    return SnapshotSeries(kind, tuple(mats), rows, cols)


def random_orthogonal(d, rng):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def report_criterion(name, ok, detail):
    line = f"{name}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
