"""Directed-graph adjacency matrices and the operations shared by every module.

The orientation convention is fixed package-wide: ``entries[i, j] != 0`` means
there is a directed edge ``i -> j``, i.e. variable ``i`` is a direct cause of
variable ``j``.  Parents of node ``j`` therefore live in column ``j``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GraphError",
    "AdjacencyMatrix",
    "is_acyclic",
    "threshold",
    "parent_set",
    "edge_list",
    "to_edge_dict",
    "from_edge_dict",
    "save_adjacency_json",
    "load_adjacency_json",
    "save_adjacency_csv",
    "load_adjacency_csv",
]


class GraphError(ValueError):
    """Raised when a graph value violates its contract."""


def _as_square_array(entries) -> np.ndarray:
    a = np.asarray(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphError(f"adjacency must be square, got shape {a.shape}")
    if a.shape[0] < 1:
        raise GraphError("adjacency must have dimension >= 1")
    if not np.all(np.isfinite(a)):
        raise GraphError("adjacency entries must be finite")
    return a


@dataclass(frozen=True)
class AdjacencyMatrix:
    """A d x d adjacency matrix, binary or weighted, with zero diagonal.

    Immutable after construction; the underlying array is write-locked so
    instances can be shared freely across workers.
    """

    entries: np.ndarray
    binary: bool = True

    def __post_init__(self):
        a = _as_square_array(self.entries)
        if np.any(np.diag(a) != 0):
            raise GraphError("adjacency diagonal must be zero (no self-loops)")
        if self.binary and not np.all((a == 0) | (a == 1)):
            raise GraphError("binary adjacency may only contain 0/1 entries")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def zeros(cls, d: int) -> "AdjacencyMatrix":
        return cls(np.zeros((d, d)), binary=True)

    @classmethod
    def from_edges(cls, d: int, edges) -> "AdjacencyMatrix":
        """Build a binary matrix from (cause_index, effect_index) pairs."""
        a = np.zeros((d, d))
        for i, j in edges:
            if not (0 <= i < d and 0 <= j < d):
                raise GraphError(f"edge ({i}, {j}) out of range for d={d}")
            if i == j:
                raise GraphError(f"self-loop ({i}, {j}) not allowed")
            a[i, j] = 1.0
        return cls(a, binary=True)

    @classmethod
    def from_weights(cls, w) -> "AdjacencyMatrix":
        """Wrap a real-valued matrix (continuous optimizer output)."""
        return cls(_as_square_array(w), binary=False)

    def n_edges(self) -> int:
        return int(np.count_nonzero(self.entries))

    def __eq__(self, other) -> bool:
        if not isinstance(other, AdjacencyMatrix):
            return NotImplemented
        return self.binary == other.binary and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.binary, self.entries.tobytes()))


def _binary_matrix_of(m) -> np.ndarray:
    """Validated binary ndarray from an AdjacencyMatrix or raw array-like.

    Raw arrays may carry nonzero diagonals (a self-loop is simply a cycle);
    AdjacencyMatrix instances cannot, by construction.
    """
    if isinstance(m, AdjacencyMatrix):
        if not m.binary:
            raise GraphError("operation requires a binary adjacency matrix")
        return m.entries
    a = _as_square_array(m)
    if not np.all((a == 0) | (a == 1)):
        raise GraphError("operation requires a binary adjacency matrix")
    return a


def is_acyclic(m) -> bool:
    """True iff the directed graph of nonzero entries has no directed cycle.

    Kahn elimination: repeatedly strip nodes with no remaining parents; the
    graph is acyclic iff every node gets stripped.
    """
    a = _binary_matrix_of(m)
    d = a.shape[0]
    in_degree = a.sum(axis=0)
    active = np.ones(d, dtype=bool)
    removed = 0
    while True:
        ready = np.flatnonzero(active & (in_degree == 0))
        if ready.size == 0:
            break
        for v in ready:
            active[v] = False
            in_degree -= a[v]
            removed += 1
    return removed == d


def threshold(m, tau: float) -> AdjacencyMatrix:
    """Binarize: entry 1 where ``|entry| > tau``, else 0; diagonal forced to 0."""
    if tau < 0:
        raise GraphError(f"tau must be nonnegative, got {tau}")
    a = m.entries if isinstance(m, AdjacencyMatrix) else _as_square_array(m)
    b = (np.abs(a) > tau).astype(float)
    np.fill_diagonal(b, 0.0)
    return AdjacencyMatrix(b, binary=True)


def parent_set(m, j: int) -> set:
    """Indices i with an edge i -> j, read from column j."""
    a = _binary_matrix_of(m)
    if not (0 <= j < a.shape[0]):
        raise IndexError(f"node index {j} out of range for d={a.shape[0]}")
    return set(int(i) for i in np.flatnonzero(a[:, j]))


def edge_list(m) -> list:
    """All (i, j) index pairs with a nonzero entry, row-major order."""
    a = m.entries if isinstance(m, AdjacencyMatrix) else _as_square_array(m)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(a))]


# ---------------------------------------------------------------------------
# Serialization: JSON edge list and dense CSV.
# ---------------------------------------------------------------------------

def to_edge_dict(m: AdjacencyMatrix, names) -> dict:
    """JSON-ready ``{"variables": [...], "edges": [[from, to], ...]}``."""
    names = list(names)
    if len(names) != m.d:
        raise GraphError(f"got {len(names)} names for d={m.d}")
    return {
        "variables": names,
        "edges": [[names[i], names[j]] for i, j in edge_list(m)],
    }


def from_edge_dict(obj: dict) -> tuple:
    """Inverse of :func:`to_edge_dict`; returns (AdjacencyMatrix, names)."""
    names = list(obj["variables"])
    if len(set(names)) != len(names):
        raise GraphError("variable names must be unique")
    index = {name: k for k, name in enumerate(names)}
    edges = []
    for frm, to in obj.get("edges", []):
        if frm not in index:
            raise GraphError(f"unknown variable {frm!r} in edge [{frm!r}, {to!r}]")
        if to not in index:
            raise GraphError(f"unknown variable {to!r} in edge [{frm!r}, {to!r}]")
        edges.append((index[frm], index[to]))
    return AdjacencyMatrix.from_edges(len(names), edges), names


def save_adjacency_json(m: AdjacencyMatrix, names, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_edge_dict(m, names), fh, indent=2)
        fh.write("\n")


def load_adjacency_json(path) -> tuple:
    with open(path) as fh:
        return from_edge_dict(json.load(fh))


def save_adjacency_csv(m, names, path) -> None:
    """Dense matrix CSV with a header row of variable names."""
    a = m.entries if isinstance(m, AdjacencyMatrix) else _as_square_array(m)
    names = list(names)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in a:
            writer.writerow([format(v, ".17g") for v in row])


def load_adjacency_csv(path) -> tuple:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0]
    a = np.array([[float(v) for v in row] for row in rows[1:]])
    binary = bool(np.all((a == 0) | (a == 1)))
    return AdjacencyMatrix(a, binary=binary), names
