"""Ranking mathematics used to evaluate scores: Hodge aggregation,
Kendall tau and the area under the ROC curve."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.stats import rankdata


class RankInputError(ValueError):
    """Malformed preferences, rankings or score lists."""


@dataclass
class PreferenceSet:
    """Edges ``(a, b, v)``; positive ``v`` means ``b`` ranks above ``a``."""

    n: int
    edges: list[tuple[int, int, float]]

    def __post_init__(self):
        for a, b, _ in self.edges:
            if a == b:
                raise RankInputError(f"self-comparison of object {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise RankInputError(f"edge ({a}, {b}) outside 0..{self.n - 1}")


@dataclass
class Ranking:
    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)

    @property
    def order(self) -> np.ndarray:
        """Indices by descending score, lower index first on ties."""
        return np.lexsort((np.arange(self.scores.size), -self.scores))

    def positions(self) -> np.ndarray:
        pos = np.empty(self.scores.size, dtype=np.int64)
        pos[self.order] = np.arange(self.scores.size)
        return pos


def hodge_aggregate(p: PreferenceSet) -> tuple[Ranking, float]:
    """Least-squares scores s with s_b - s_a closest to every v_ab.

    Solved through the normal equations of the edge incidence matrix
    (the graph Laplacian) with its pseudo-inverse, which pins the mean of
    s to zero on every connected component. Returns the ranking and the
    attained sum of squared residuals.
    """
    if p.n < 2 or not p.edges:
        raise RankInputError("need at least two objects and one comparison")
    m = len(p.edges)
    Bm = np.zeros((m, p.n))
    v = np.empty(m)
    for k, (a, b, w) in enumerate(p.edges):
        Bm[k, a] -= 1.0
        Bm[k, b] += 1.0
        v[k] = w
    L = Bm.T @ Bm
    ncomp, _ = connected_components((L != 0).astype(int), directed=False)
    if ncomp > 1:
        warnings.warn(f"comparison graph has {ncomp} components; scores are only "
                      "comparable within a component", RuntimeWarning, stacklevel=2)
    s = np.linalg.pinv(L) @ (Bm.T @ v)
    resid = float(((Bm @ s - v) ** 2).sum())
    return Ranking(s), resid


def kendall_tau(r1: Ranking, r2: Ranking) -> float:
    """Average over pairs of the product of the two orders' pairwise signs."""
    if r1.scores.size != r2.scores.size:
        raise RankInputError(f"rankings have different lengths {r1.scores.size} and {r2.scores.size}")
    n = r1.scores.size
    if n < 2:
        raise RankInputError("need at least two objects")
    p1, p2 = r1.positions(), r2.positions()
    s1 = np.sign(p1[:, None] - p1[None, :])
    s2 = np.sign(p2[:, None] - p2[None, :])
    iu = np.triu_indices(n, 1)
    return float((s1[iu] * s2[iu]).sum() / (n * (n - 1) / 2))


def auroc(pos, neg) -> float:
    """Probability that a positive outscores a negative, ties counting one half."""
    pos = np.asarray(pos, dtype=np.float64).ravel()
    neg = np.asarray(neg, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise RankInputError("both score lists must be nonempty")
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[:pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def load_preferences_csv(path, n: int | None = None) -> PreferenceSet:
    edges = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                a, b, w = int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                continue  # header
            edges.append((a, b, w))
    if n is None:
        n = 1 + max(max(a, b) for a, b, _ in edges) if edges else 0
    return PreferenceSet(n, edges)


def save_ranking_csv(r: Ranking, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "score"])
        for i, s in enumerate(r.scores):
            w.writerow([i, repr(float(s))])


def load_ranking_csv(path) -> Ranking:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    scores = np.zeros(len(rows))
    for row in rows:
        scores[int(row["index"])] = float(row["score"])
    return Ranking(scores)
