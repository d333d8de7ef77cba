"""Bundled benchmark networks, forward sampling, and observation ingestion.

Network definitions (structure plus conditional probability tables) ship as
JSON data files so tests never touch the network.  Real-world observation
tables (e.g. the protein-signalling data) are user-supplied CSV files loaded
against a bundled ground-truth structure.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import CONTINUOUS, DISCRETE, Dataset, VariableMeta
from .graphs import AdjacencyMatrix, GraphError, from_edge_dict, is_acyclic, parent_set

__all__ = [
    "BUNDLED_NETWORKS",
    "BayesNet",
    "GroundTruth",
    "bundled_path",
    "load_network",
    "load_ground_truth",
    "network_from_dict",
    "forward_sample",
    "load_observations",
    "save_observations_csv",
]

_DATA_DIR = Path(__file__).parent / "data"

BUNDLED_NETWORKS = ("lucas", "asia", "earthquake", "child")
GROUND_TRUTH_ONLY = ("sachs",)


def bundled_path(*parts) -> Path:
    """Path inside the package data directory (networks, fixtures)."""
    return _DATA_DIR.joinpath(*parts)


@dataclass(frozen=True)
class BayesNet:
    """Discrete Bayesian network: variables, structure, and CPTs.

    ``cpts[node][parent_key]`` is the categorical distribution of the node
    for one joint parent assignment, where ``parent_key`` comma-joins the
    parents' category labels with the parents ordered by name ("" for roots).
    """

    name: str
    variables: tuple
    adjacency: AdjacencyMatrix
    cpts: dict

    def __post_init__(self):
        variables = tuple(self.variables)
        object.__setattr__(self, "variables", variables)
        if not is_acyclic(self.adjacency):
            raise GraphError(f"network {self.name!r} structure is cyclic")
        for meta in variables:
            if meta.kind != DISCRETE:
                raise ValueError(f"network variable {meta.name!r} must be discrete")
        self._validate_cpts()

    def _validate_cpts(self):
        names = [m.name for m in self.variables]
        index = {name: k for k, name in enumerate(names)}
        for j, meta in enumerate(self.variables):
            table = self.cpts.get(meta.name)
            if table is None:
                raise ValueError(f"missing CPT for {meta.name!r}")
            expected_keys = {key for key, _ in self._parent_configs(j)}
            if set(table) != expected_keys:
                missing = expected_keys - set(table)
                extra = set(table) - expected_keys
                raise ValueError(
                    f"CPT for {meta.name!r} has wrong parent configurations "
                    f"(missing {sorted(missing)!r}, extra {sorted(extra)!r})"
                )
            for key, probs in table.items():
                probs = np.asarray(probs, dtype=float)
                if probs.shape != (meta.n_categories,):
                    raise ValueError(
                        f"CPT row {meta.name!r}[{key!r}] has {probs.size} entries "
                        f"for {meta.n_categories} categories"
                    )
                if np.any(probs < 0) or abs(float(probs.sum()) - 1.0) > 1e-9:
                    raise ValueError(f"CPT row {meta.name!r}[{key!r}] does not sum to 1")

    def sorted_parents(self, j: int) -> list:
        """Parent indices of node j ordered by parent name (the CPT key order)."""
        names = [m.name for m in self.variables]
        return sorted(parent_set(self.adjacency, j), key=lambda p: names[p])

    def _parent_configs(self, j: int):
        """Yield (parent_key, codes_tuple) over all parent assignments of node j."""
        parents = self.sorted_parents(j)
        if not parents:
            yield "", ()
            return
        label_sets = [self.variables[p].categories for p in parents]
        for labels in itertools.product(*label_sets):
            codes = tuple(self.variables[p].categories.index(lab)
                          for p, lab in zip(parents, labels))
            yield ",".join(str(lab) for lab in labels), codes

    @property
    def d(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class GroundTruth:
    """Named true structure used for evaluation."""

    name: str
    adjacency: AdjacencyMatrix
    variables: tuple

    def __post_init__(self):
        if not is_acyclic(self.adjacency):
            raise GraphError(f"ground truth {self.name!r} is cyclic")
        object.__setattr__(self, "variables", tuple(self.variables))


def network_from_dict(name: str, obj: dict) -> BayesNet:
    """Build a validated network from the documented JSON schema."""
    variables = tuple(
        VariableMeta(name=v["name"], kind=DISCRETE, categories=tuple(v["categories"]))
        for v in obj["variables"]
    )
    adjacency, _ = from_edge_dict(
        {"variables": [v.name for v in variables], "edges": obj.get("edges", [])}
    )
    cpts = {node: {key: list(map(float, probs)) for key, probs in table.items()}
            for node, table in obj["cpts"].items()}
    return BayesNet(name=name, variables=variables, adjacency=adjacency, cpts=cpts)


def load_network(name: str) -> BayesNet:
    """Load one of the bundled discrete networks by name."""
    key = name.lower()
    if key not in BUNDLED_NETWORKS:
        raise KeyError(f"unknown network {name!r}; bundled: {', '.join(BUNDLED_NETWORKS)}")
    with open(bundled_path("networks", f"{key}.json")) as fh:
        return network_from_dict(key, json.load(fh))


def load_ground_truth(name: str) -> GroundTruth:
    """True structure for any bundled benchmark, including structure-only ones."""
    key = name.lower()
    if key in BUNDLED_NETWORKS:
        net = load_network(key)
        return GroundTruth(name=key, adjacency=net.adjacency,
                           variables=tuple(m.name for m in net.variables))
    if key in GROUND_TRUTH_ONLY:
        with open(bundled_path("ground_truth", f"{key}.json")) as fh:
            adjacency, names = from_edge_dict(json.load(fh))
        return GroundTruth(name=key, adjacency=adjacency, variables=tuple(names))
    raise KeyError(
        f"unknown ground truth {name!r}; available: "
        f"{', '.join(BUNDLED_NETWORKS + GROUND_TRUTH_ONLY)}"
    )


def forward_sample(net: BayesNet, n: int, seed: int = 0) -> Dataset:
    """Draw n i.i.d. rows by ancestral sampling in topological order.

    Deterministic for a fixed seed: nodes are visited in index-ascending
    topological order and each consumes one uniform draw per row.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    d = net.d
    order = _topological_order(net.adjacency)
    codes = np.zeros((n, d), dtype=np.int64)

    for j in order:
        meta = net.variables[j]
        parents = net.sorted_parents(j)
        table = net.cpts[meta.name]
        if parents:
            strides = np.ones(len(parents), dtype=np.int64)
            for k in range(1, len(parents)):
                strides[k] = strides[k - 1] * net.variables[parents[k - 1]].n_categories
            config = sum(codes[:, p] * s for p, s in zip(parents, strides))
            prob_rows = np.empty((int(strides[-1]) * net.variables[parents[-1]].n_categories,
                                  meta.n_categories))
            for key, parent_codes in net._parent_configs(j):
                config_id = int(sum(c * s for c, s in zip(parent_codes, strides)))
                prob_rows[config_id] = table[key]
            cumulative = np.cumsum(prob_rows, axis=1)[config]
        else:
            cumulative = np.cumsum(np.asarray(table[""], dtype=float))
            cumulative = np.broadcast_to(cumulative, (n, meta.n_categories))
        u = rng.random(n)
        codes[:, j] = (u[:, None] > cumulative).sum(axis=1)

    codes = np.minimum(codes, [m.n_categories - 1 for m in net.variables])
    return Dataset(values=codes.astype(float), variables=net.variables)


def _topological_order(m: AdjacencyMatrix) -> list:
    a = m.entries
    d = m.d
    in_degree = a.sum(axis=0).astype(int)
    order = []
    ready = sorted(np.flatnonzero(in_degree == 0).tolist())
    seen = set()
    while ready:
        v = ready.pop(0)
        order.append(v)
        seen.add(v)
        for w in np.flatnonzero(a[v]).tolist():
            in_degree[w] -= 1
            if in_degree[w] == 0 and w not in seen:
                ready.append(w)
        ready.sort()
    if len(order) != d:
        raise GraphError("cannot topologically order a cyclic graph")
    return order


def load_observations(path, ground_truth: GroundTruth | None = None) -> Dataset:
    """Read an observation CSV (header row of variable names).

    Columns whose cells all parse as numbers become continuous variables;
    columns with no numeric cells become discrete with their sorted unique
    labels as categories; mixed columns are an error.  With a ground truth,
    column names are validated and reordered to the truth's variable order.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if any(len(r) != len(header) for r in body):
        raise ValueError(f"{path}: ragged rows")

    column_order = range(len(header))
    if ground_truth is not None:
        missing = [v for v in ground_truth.variables if v not in header]
        extra = [h for h in header if h not in ground_truth.variables]
        if missing or extra:
            raise ValueError(
                f"{path}: columns do not match ground truth "
                f"{ground_truth.name!r} (missing {missing!r}, extra {extra!r})"
            )
        column_order = [header.index(v) for v in ground_truth.variables]

    variables = []
    columns = []
    for c in column_order:
        name = header[c]
        raw = [r[c].strip() for r in body]
        parsed = []
        numeric = True
        for cell in raw:
            try:
                parsed.append(float(cell))
            except ValueError:
                numeric = False
                break
        if numeric:
            variables.append(VariableMeta(name=name, kind=CONTINUOUS))
            columns.append(np.asarray(parsed))
            continue
        if any(_is_number(cell) for cell in raw):
            raise ValueError(f"{path}: non-numeric cell in continuous column {name!r}")
        categories = tuple(sorted(set(raw)))
        lookup = {lab: k for k, lab in enumerate(categories)}
        variables.append(VariableMeta(name=name, kind=DISCRETE, categories=categories))
        columns.append(np.asarray([lookup[cell] for cell in raw], dtype=float))

    return Dataset(values=np.column_stack(columns), variables=tuple(variables))


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def save_observations_csv(data: Dataset, path) -> None:
    """Write a Dataset as CSV, with discrete codes expanded to their labels."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.names)
        for row in data.values:
            out = []
            for j, meta in enumerate(data.variables):
                if meta.kind == DISCRETE:
                    out.append(meta.categories[int(row[j])])
                else:
                    out.append(format(row[j], ".17g"))
            writer.writerow(out)
