"""Snapshot sequences of binary graphs stored as CSR adjacency matrices."""

from __future__ import annotations

import datetime as _dt
import enum
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EdgeListParseError, StructureError, UnknownNodeError

__all__ = [
    "GraphKind",
    "SnapshotSeries",
    "EdgeListFormat",
    "ingest_edge_list",
    "read_edge_list",
    "write_edge_list",
    "write_series",
    "read_series",
    "split_train_test",
    "collapse_weighted",
    "ever_active",
    "binary_csr",
]

MANIFEST_NAME = "manifest.json"


class GraphKind(str, enum.Enum):
    UNDIRECTED = "undirected"
    DIRECTED = "directed"
    BIPARTITE = "bipartite"

    @property
    def unipartite(self) -> bool:
        return self is not GraphKind.BIPARTITE

    @property
    def symmetric(self) -> bool:
        return self is GraphKind.UNDIRECTED


def binary_csr(matrix, shape=None) -> sp.csr_matrix:
    """Return a canonical CSR copy of ``matrix`` with every stored entry equal to 1.

    Duplicates are merged, explicit zeros removed and column indices sorted.
    """
    A = sp.csr_matrix(matrix, shape=shape, dtype=np.float64, copy=True)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.data[:] = 1.0
    A.sort_indices()
    return A


@dataclass(frozen=True, eq=False)
class SnapshotSeries:
    """Ordered binary adjacency matrices A_1..A_T over a fixed node set.

    For unipartite kinds ``col_labels`` equals ``row_labels``. Instances are
    validated on construction and treated as immutable afterwards.
    """

    kind: GraphKind
    snapshots: tuple
    row_labels: tuple
    col_labels: tuple = field(default=None)

    def __post_init__(self):
        kind = GraphKind(self.kind)
        object.__setattr__(self, "kind", kind)
        row_labels = tuple(self.row_labels)
        col_labels = row_labels if self.col_labels is None else tuple(self.col_labels)
        if kind.unipartite and col_labels != row_labels:
            raise StructureError("unipartite series must share row and column labels")
        object.__setattr__(self, "row_labels", row_labels)
        object.__setattr__(self, "col_labels", col_labels)
        shape = (len(row_labels), len(col_labels))
        if not self.snapshots:
            raise StructureError("a series needs at least one snapshot")
        for t, A in enumerate(self.snapshots, start=1):
            if tuple(A.shape) != shape:
                raise StructureError(f"snapshot {t} has shape {tuple(A.shape)}, expected {shape}")
        mats = tuple(binary_csr(A) for A in self.snapshots)
        for t, A in enumerate(mats, start=1):
            if kind.unipartite and A.diagonal().any():
                raise StructureError(f"snapshot {t} has self-loops")
            if kind.symmetric and (A != A.T).nnz:
                raise StructureError(f"snapshot {t} is not symmetric")
        object.__setattr__(self, "snapshots", mats)

    @property
    def T(self) -> int:
        return len(self.snapshots)

    @property
    def shape(self) -> tuple[int, int]:
        return self.snapshots[0].shape

    @property
    def n(self) -> int:
        return self.shape[0]

    def __len__(self):
        return self.T

    def __getitem__(self, t):
        return self.snapshots[t]

    def __eq__(self, other):
        if not isinstance(other, SnapshotSeries):
            return NotImplemented
        if (self.kind, self.row_labels, self.col_labels, self.T) != (
            other.kind, other.row_labels, other.col_labels, other.T
        ):
            return False
        return all((a != b).nnz == 0 for a, b in zip(self.snapshots, other.snapshots))

    __hash__ = None

    def with_snapshots(self, snapshots) -> "SnapshotSeries":
        return SnapshotSeries(self.kind, tuple(snapshots), self.row_labels, self.col_labels)

    def dense(self) -> np.ndarray:
        """(T, n1, n2) dense stack; only sensible for small graphs."""
        return np.stack([A.toarray() for A in self.snapshots])

    def pair_mask(self) -> np.ndarray:
        """Boolean mask of the node pairs that count as distinct candidate links."""
        n1, n2 = self.shape
        if self.kind is GraphKind.UNDIRECTED:
            return np.triu(np.ones((n1, n2), dtype=bool), k=1)
        if self.kind is GraphKind.DIRECTED:
            return ~np.eye(n1, dtype=bool)
        return np.ones((n1, n2), dtype=bool)


@dataclass(frozen=True)
class EdgeListFormat:
    """Column layout of a delimiter-separated edge list.

    ``delimiter=None`` splits on runs of whitespace.
    """

    delimiter: str | None = None
    time_col: int = 0
    source_col: int = 1
    dest_col: int = 2
    comment: str = "#"


def _parse_time(token: str):
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return _dt.datetime.fromisoformat(token)
    except ValueError:
        return None


def ingest_edge_list(
    stream: Iterable[str],
    fmt: EdgeListFormat | None = None,
    kind: GraphKind | str = GraphKind.UNDIRECTED,
    census=None,
) -> SnapshotSeries:
    """Build a :class:`SnapshotSeries` from ``(time, source, destination)`` records.

    Time values (integers or ISO dates) are mapped to 1..T by sorted rank.
    Labels are interned in order of first appearance unless ``census`` fixes
    the node set: a sequence of labels, or a ``(sources, destinations)`` pair
    for bipartite graphs. Duplicate records collapse to a single link,
    undirected links are stored symmetrically and self-loops are dropped for
    unipartite kinds.
    """
    fmt = fmt or EdgeListFormat()
    kind = GraphKind(kind)
    width = max(fmt.time_col, fmt.source_col, fmt.dest_col) + 1

    if census is None:
        row_index: dict = {}
        col_index: dict = row_index if kind.unipartite else {}
        frozen = False
    else:
        if kind.unipartite:
            row_index = {lab: i for i, lab in enumerate(census)}
            col_index = row_index
        else:
            sources, dests = census
            row_index = {lab: i for i, lab in enumerate(sources)}
            col_index = {lab: i for i, lab in enumerate(dests)}
        frozen = True

    def intern(index, label, line_no):
        pos = index.get(label)
        if pos is None:
            if frozen:
                raise UnknownNodeError(line_no, label)
            pos = index[label] = len(index)
        return pos

    records = []
    time_type = None
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith(fmt.comment):
            continue
        parts = [p.strip() for p in line.split(fmt.delimiter)]
        if len(parts) < width:
            raise EdgeListParseError(line_no, f"expected at least {width} columns, got {len(parts)}")
        t = _parse_time(parts[fmt.time_col])
        if t is None:
            raise EdgeListParseError(line_no, f"unparseable time value {parts[fmt.time_col]!r}")
        if time_type is None:
            time_type = type(t)
        elif type(t) is not time_type:
            raise EdgeListParseError(line_no, "mixed integer and date time values")
        src, dst = parts[fmt.source_col], parts[fmt.dest_col]
        if not src or not dst:
            raise EdgeListParseError(line_no, "empty node label")
        i = intern(row_index, src, line_no)
        j = intern(col_index, dst, line_no)
        records.append((t, i, j))

    if not records:
        raise EdgeListParseError(0, "no edge records found")

    times = sorted({r[0] for r in records})
    rank = {t: k for k, t in enumerate(times)}
    row_labels = tuple(row_index)
    col_labels = tuple(col_index)
    shape = (len(row_labels), len(col_labels))

    per_t: list[list[tuple[int, int]]] = [[] for _ in times]
    for t, i, j in records:
        if kind.unipartite and i == j:
            continue
        per_t[rank[t]].append((i, j))
        if kind.symmetric:
            per_t[rank[t]].append((j, i))

    snapshots = []
    for pairs in per_t:
        if pairs:
            r, c = np.array(pairs, dtype=np.int64).T
        else:
            r = c = np.zeros(0, dtype=np.int64)
        snapshots.append(sp.csr_matrix((np.ones(len(r)), (r, c)), shape=shape))
    return SnapshotSeries(kind, tuple(snapshots), row_labels, None if kind.unipartite else col_labels)


def read_edge_list(path, fmt=None, kind=GraphKind.UNDIRECTED, census=None) -> SnapshotSeries:
    with open(path, encoding="utf-8") as fh:
        return ingest_edge_list(fh, fmt=fmt, kind=kind, census=census)


def write_edge_list(series: SnapshotSeries, stream, delimiter: str = " ") -> None:
    """Write ``series`` as ``t source destination`` records with t = 1..T."""
    stream.write("# time source destination\n")
    for t, A in enumerate(series.snapshots, start=1):
        coo = A.tocoo()
        for i, j in zip(coo.row, coo.col):
            if series.kind.symmetric and i > j:
                continue
            stream.write(f"{t}{delimiter}{series.row_labels[i]}{delimiter}{series.col_labels[j]}\n")


def write_series(series: SnapshotSeries, directory) -> None:
    """Serialize to ``directory``: a JSON manifest plus one ``i j`` triplet file per snapshot."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for t, A in enumerate(series.snapshots, start=1):
        name = f"snapshot_{t:05d}.txt"
        coo = A.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
            for k in order:
                fh.write(f"{coo.row[k]} {coo.col[k]}\n")
        files.append(name)
    manifest = {
        "format": "rdpglink-series",
        "version": 1,
        "kind": series.kind.value,
        "n": list(series.shape),
        "T": series.T,
        "row_labels": list(series.row_labels),
        "col_labels": list(series.col_labels),
        "snapshots": files,
    }
    with open(os.path.join(directory, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)


def read_series(directory) -> SnapshotSeries:
    with open(os.path.join(directory, MANIFEST_NAME), encoding="utf-8") as fh:
        manifest = json.load(fh)
    kind = GraphKind(manifest["kind"])
    shape = tuple(manifest["n"])
    snapshots = []
    for name in manifest["snapshots"]:
        entries = np.loadtxt(os.path.join(directory, name), dtype=np.int64, ndmin=2)
        entries = entries.reshape(-1, 2)
        snapshots.append(
            sp.csr_matrix((np.ones(len(entries)), (entries[:, 0], entries[:, 1])), shape=shape)
        )
    if len(snapshots) != manifest["T"]:
        raise StructureError("manifest T does not match the number of snapshot files")
    col_labels = None if kind.unipartite else manifest["col_labels"]
    return SnapshotSeries(kind, tuple(snapshots), manifest["row_labels"], col_labels)


def split_train_test(series: SnapshotSeries, t_prime: int):
    """Split into snapshots 1..t_prime and t_prime+1..T."""
    if not 1 <= t_prime < series.T:
        raise ValueError(f"t_prime must satisfy 1 <= t_prime < T={series.T}, got {t_prime}")
    return (
        series.with_snapshots(series.snapshots[:t_prime]),
        series.with_snapshots(series.snapshots[t_prime:]),
    )


def collapse_weighted(series: SnapshotSeries, weights: Sequence[float]) -> sp.csr_matrix:
    """Weighted collapse sum_t psi_{T-t+1} A_t.

    ``weights[0]`` multiplies the most recent snapshot A_T.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (series.T,):
        raise ValueError(f"expected {series.T} weights, got shape {weights.shape}")
    out = sp.csr_matrix(series.shape, dtype=np.float64)
    for t, A in enumerate(series.snapshots):
        w = weights[series.T - 1 - t]
        if w != 0.0:
            out = out + w * A
    out.sort_indices()
    return out


def ever_active(series: SnapshotSeries) -> sp.csr_matrix:
    """Binary matrix of pairs linked in at least one snapshot."""
    total = series.snapshots[0].copy()
    for A in series.snapshots[1:]:
        total = total + A
    return binary_csr(total)


def uniform_weights(T: int) -> np.ndarray:
    return np.full(T, 1.0 / T)
