"""Ranking-quality measures. All of them look only at rank positions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidArgumentError, RankingList


def _check_pair(a: RankingList, b: RankingList) -> None:
    if a.n != b.n:
        raise InvalidArgumentError(f"rankings differ in size: {a.n} vs {b.n}")


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"k={k} outside 1..{n}")


def kendall_tau(pi1: RankingList, pi2: RankingList) -> float:
    _check_pair(pi1, pi2)
    n = pi1.n
    if n < 2:
        return 1.0
    r1 = pi1.rank_of
    r2 = pi2.rank_of
    iu, ju = np.triu_indices(n, k=1)
    s = np.sign(r1[iu] - r1[ju]) * np.sign(r2[iu] - r2[ju])
    return float(2.0 * s.sum() / (n * (n - 1)))


def reciprocal_rank(truth: RankingList, other: RankingList) -> float:
    _check_pair(truth, other)
    return 1.0 / float(other.rank_of[truth.order[0]])


def precision_at_k(truth: RankingList, other: RankingList, k: int) -> float:
    _check_pair(truth, other)
    _check_k(k, truth.n)
    return len(set(truth.top(k).tolist()) & set(other.top(k).tolist())) / k


def average_precision_at_k(truth: RankingList, other: RankingList, k: int) -> float:
    """Mean over the first ``k`` positions of ``rel(j) * P@j``.

    An item is relevant when it sits in the truth's top ``k``.
    """
    _check_pair(truth, other)
    _check_k(k, truth.n)
    relevant = set(truth.top(k).tolist())
    hits = 0
    total = 0.0
    for pos, item in enumerate(other.top(k).tolist(), start=1):
        if item in relevant:
            hits += 1
            total += hits / pos
    return total / k


def ndcg_at_k(truth: RankingList, other: RankingList, k: int) -> float:
    """Linear gain ``n - truth_rank`` with a ``1/log2(pos + 1)`` discount."""
    _check_pair(truth, other)
    _check_k(k, truth.n)
    n = truth.n
    discount = 1.0 / np.log2(np.arange(2, k + 2))
    gains = n - truth.rank_of  # top item gets n-1
    dcg = float(np.dot(gains[other.top(k)], discount))
    ideal = float(np.dot(gains[truth.top(k)], discount))
    if ideal == 0:
        return 1.0  # only when n == 1
    return dcg / ideal


@dataclass(frozen=True)
class MetricReport:
    kendall_tau: float
    reciprocal_rank: float
    precision_at_k: float
    ap_at_k: float
    ndcg_at_k: float
    k: int

    @classmethod
    def compute(cls, truth: RankingList, other: RankingList, k: int) -> "MetricReport":
        return cls(
            kendall_tau(truth, other),
            reciprocal_rank(truth, other),
            precision_at_k(truth, other, k),
            average_precision_at_k(truth, other, k),
            ndcg_at_k(truth, other, k),
            k,
        )

    def to_json(self) -> dict:
        return {
            "kendall_tau": self.kendall_tau,
            "r_rank": self.reciprocal_rank,
            "p_at_k": self.precision_at_k,
            "ap_at_k": self.ap_at_k,
            "ndcg_at_k": self.ndcg_at_k,
            "k": self.k,
        }
