"""Structural evaluation of an estimated graph against ground truth.

An estimated edge counts as correct only when the true graph contains it with
the same direction; a reversed edge is wrong for FDR purposes but costs a
single flip in the structural Hamming distance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graphs import AdjacencyMatrix

__all__ = ["EdgeCounts", "EvalReport", "evaluate"]


class EdgeCounts(NamedTuple):
    true_positives: int
    false_positives: int
    reversed: int
    missing: int
    extra: int


@dataclass(frozen=True)
class EvalReport:
    shd: int
    tpr: float
    fdr: float
    counts: EdgeCounts

    def to_dict(self) -> dict:
        return {
            "shd": self.shd,
            "tpr": self.tpr,
            "fdr": self.fdr,
            "true_positives": self.counts.true_positives,
            "false_positives": self.counts.false_positives,
            "reversed": self.counts.reversed,
            "missing": self.counts.missing,
            "extra": self.counts.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def csv_header() -> list:
        return ["shd", "tpr", "fdr", "true_positives", "false_positives",
                "reversed", "missing", "extra"]

    def csv_row(self) -> list:
        d = self.to_dict()
        return [d[k] for k in self.csv_header()]


def _entries(m) -> np.ndarray:
    if hasattr(m, "adjacency"):
        return m.adjacency.entries
    if isinstance(m, AdjacencyMatrix):
        return m.entries
    return np.asarray(m, dtype=float)


def evaluate(estimated: AdjacencyMatrix, truth, skeleton: bool = False) -> EvalReport:
    """Score an estimated binary graph against a ground truth.

    Directed mode (default): a predicted edge is correct iff the truth has it
    as directed; FDR = wrong predicted / total predicted (0 when nothing is
    predicted), TPR = correct predicted / true edges (1 when the truth is
    empty).  SHD counts, per unordered pair, one edit for an edge present in
    exactly one graph and one flip for an edge oriented oppositely.

    Skeleton mode ignores orientation everywhere.
    """
    est = estimated.entries if isinstance(estimated, AdjacencyMatrix) else np.asarray(estimated)
    tru = _entries(truth)
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch: estimated {est.shape} vs truth {tru.shape}")
    if not np.all((est == 0) | (est == 1)):
        raise ValueError("estimated graph must be binary")
    d = est.shape[0]

    if skeleton:
        est_s = np.triu((est + est.T) > 0)
        tru_s = np.triu((tru + tru.T) > 0)
        tp = int(np.sum(est_s & tru_s))
        fp = int(np.sum(est_s & ~tru_s))
        missing = int(np.sum(~est_s & tru_s))
        n_true = int(tru_s.sum())
        n_pred = int(est_s.sum())
        shd = fp + missing
        counts = EdgeCounts(true_positives=tp, false_positives=fp, reversed=0,
                            missing=missing, extra=fp)
        tpr = tp / n_true if n_true > 0 else 1.0
        fdr = fp / n_pred if n_pred > 0 else 0.0
        return EvalReport(shd=shd, tpr=tpr, fdr=fdr, counts=counts)

    tp = int(np.sum((est == 1) & (tru == 1)))
    fp = int(np.sum((est == 1) & (tru == 0)))
    rev = int(np.sum((est == 1) & (tru == 0) & (tru.T == 1)))
    missing = int(np.sum((tru == 1) & (est == 0) & (est.T == 0)))
    extra = fp - rev
    n_true = int(tru.sum())
    n_pred = int(est.sum())

    shd = 0
    for i in range(d):
        for j in range(i + 1, d):
            e = (int(est[i, j]), int(est[j, i]))
            t = (int(tru[i, j]), int(tru[j, i]))
            if e == t:
                continue
            if sum(e) == 1 and sum(t) == 1:
                shd += 1  # flip
            else:
                shd += abs(sum(e) - sum(t))  # insertions/deletions

    tpr = tp / n_true if n_true > 0 else 1.0
    fdr = fp / n_pred if n_pred > 0 else 0.0
    counts = EdgeCounts(true_positives=tp, false_positives=fp, reversed=rev,
                        missing=missing, extra=extra)
    return EvalReport(shd=shd, tpr=tpr, fdr=fdr, counts=counts)
