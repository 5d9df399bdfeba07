"""Shared data types for estimation from pairwise comparisons.

Every dataset lives on the full ordered-pair design: for ``n`` items there are
``N = n(n-1)`` slots ``(i, j)``, ``i != j``, listed lexicographically. A weight
on slot ``(i, j)`` counts votes for ``i`` beating ``j``. Labels are always 1
and are never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

ROUNDING_MODES = ("nearest", "floor", "ceil", "largest-remainder")


class InvalidArgumentError(ValueError):
    pass


class DegenerateInputError(ValueError):
    """Raised when the data carries no information (e.g. all-zero weights)."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations.

    The last iterate and its gradient norm are attached so callers can decide
    whether the result is still usable.
    """

    def __init__(self, message: str, last_iterate: FloatArray, grad_norm: float):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.grad_norm = grad_norm


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def slot_count(n: int) -> int:
    return n * (n - 1)


def pair_indices(n: int) -> tuple[IntArray, IntArray]:
    """Return the (winner, loser) arrays of all ordered pairs in slot order."""
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    mask = i != j
    return i[mask].astype(np.int64), j[mask].astype(np.int64)


def slot_index(n: int, i: int, j: int) -> int:
    """Position of ordered pair ``(i, j)`` in the lexicographic slot order."""
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise InvalidArgumentError(f"invalid pair ({i}, {j}) for n={n}")
    return i * (n - 1) + (j if j < i else j - 1)


@dataclass(frozen=True)
class ComparisonDataset:
    """Integer vote counts on the full ordered-pair design."""

    n: int
    weights: IntArray

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgumentError(f"need at least 2 items, got n={self.n}")
        w = np.asarray(self.weights)
        if w.shape != (slot_count(self.n),):
            raise InvalidArgumentError(
                f"expected {slot_count(self.n)} weights for n={self.n}, got shape {w.shape}"
            )
        if w.dtype.kind == "f":
            if not np.all(np.isfinite(w)) or np.any(w != np.round(w)):
                raise InvalidArgumentError("weights must be integral")
        elif w.dtype.kind not in "iu":
            raise InvalidArgumentError(f"weights must be integers, got dtype {w.dtype}")
        if np.any(w < 0):
            raise InvalidArgumentError("weights must be nonnegative")
        w = w.astype(np.int64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def num_slots(self) -> int:
        return slot_count(self.n)

    @property
    def total(self) -> int:
        return int(self.weights.sum())

    @cached_property
    def pairs(self) -> tuple[IntArray, IntArray]:
        return pair_indices(self.n)

    def design_matrix(self) -> FloatArray:
        """Dense ``N x n`` incidence matrix: +1 at the winner, -1 at the loser."""
        i, j = self.pairs
        B = np.zeros((self.num_slots, self.n))
        rows = np.arange(self.num_slots)
        B[rows, i] = 1.0
        B[rows, j] = -1.0
        return B

    def with_weights(self, weights) -> "ComparisonDataset":
        return ComparisonDataset(self.n, np.asarray(weights))

    def frequencies(self) -> "FrequencyVector":
        """Empirical frequency ``p = w / M0``."""
        if self.total <= 0:
            raise DegenerateInputError("dataset has zero total weight")
        return FrequencyVector(self.weights / self.total, normalized=True)


def build_full_design(n: int) -> ComparisonDataset:
    """Empty dataset over all ``n(n-1)`` ordered pairs."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidArgumentError(f"need an integer n >= 2, got {n!r}")
    return ComparisonDataset(int(n), np.zeros(slot_count(int(n)), dtype=np.int64))


@dataclass(frozen=True)
class FrequencyVector:
    values: FloatArray
    normalized: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise InvalidArgumentError("frequency vector must be one-dimensional")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidArgumentError("frequencies must be finite and nonnegative")
        if self.normalized and abs(v.sum() - 1.0) > 1e-9:
            raise InvalidArgumentError(f"frequencies flagged normalized but sum to {v.sum()!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ScoreVector:
    """Item quality scores, stored as the mean-zero representative."""

    theta: FloatArray

    def __post_init__(self):
        t = np.array(self.theta, dtype=np.float64)
        if t.ndim != 1 or t.size < 1:
            raise InvalidArgumentError("scores must be a nonempty vector")
        t = t - t.mean()
        t.setflags(write=False)
        object.__setattr__(self, "theta", t)

    @property
    def n(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class AttackBudget:
    """Adversary knobs shared by the attacks.

    ``b`` and ``l`` are the l1 / l-infinity integer caps on the weight change;
    ``s1`` / ``s2`` are the random baseline's inject / delete fractions.
    """

    alpha: float = 0.0
    kappa: float = 0.0
    b: int | None = None
    l: int | None = None
    s1: float = 0.0
    s2: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.kappa < 0:
            raise InvalidArgumentError("alpha and kappa must be nonnegative")
        for name in ("s1", "s2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [0, 1]")
        if self.b is not None and self.b < 1:
            raise InvalidArgumentError("b must be a positive integer")
        if self.l is not None and self.l < 1:
            raise InvalidArgumentError("l must be a positive integer")

    def check_caps(self, w0) -> None:
        """Enforce ``l <= min(max(w0), b)`` when both integer caps are active."""
        if self.b is None or self.l is None:
            return
        bound = min(int(np.max(w0)), self.b)
        if self.l > bound:
            raise InvalidArgumentError(f"l={self.l} exceeds min(max(w0), b)={bound}")


@dataclass(frozen=True)
class RankingList:
    order: IntArray
    rank_of: IntArray = field(init=False)

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        n = order.size
        if n < 1 or not np.array_equal(np.sort(order), np.arange(n)):
            raise InvalidArgumentError("order must be a permutation of 0..n-1")
        rank_of = np.empty(n, dtype=np.int64)
        rank_of[order] = np.arange(1, n + 1)
        order.setflags(write=False)
        rank_of.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "rank_of", rank_of)

    @property
    def n(self) -> int:
        return self.order.size

    def top(self, k: int) -> IntArray:
        return self.order[:k]


def rank_from_scores(theta) -> RankingList:
    """Best-first ordering; equal scores keep ascending item index."""
    t = theta.theta if isinstance(theta, ScoreVector) else np.asarray(theta, dtype=float)
    # lexsort uses the last key as primary
    order = np.lexsort((np.arange(t.size), -t))
    return RankingList(order)


def residuals(theta, n: int) -> FloatArray:
    """Per-slot residual ``1 - (theta_i - theta_j)``."""
    t = theta.theta if isinstance(theta, ScoreVector) else np.asarray(theta, dtype=float)
    i, j = pair_indices(n)
    return 1.0 - (t[i] - t[j])


def weighted_loss(theta, freq, data: ComparisonDataset) -> float:
    """``(1/2N) * sum q_ij (1 - theta_i + theta_j)^2``."""
    t = theta.theta if isinstance(theta, ScoreVector) else np.asarray(theta, dtype=float)
    q = freq.values if isinstance(freq, FrequencyVector) else np.asarray(freq, dtype=float)
    if t.shape != (data.n,):
        raise InvalidArgumentError(f"theta has shape {t.shape}, expected ({data.n},)")
    if q.shape != (data.num_slots,):
        raise InvalidArgumentError(f"frequency has shape {q.shape}, expected ({data.num_slots},)")
    i, j = data.pairs
    r = 1.0 - (t[i] - t[j])
    return float(np.dot(q, r * r) / (2 * data.num_slots))


def round_weights(w: FloatArray, mode: str = "nearest") -> IntArray:
    """Turn real-valued weights into vote counts.

    ``largest-remainder`` preserves ``floor(sum(w))`` exactly, handing the
    leftover units to the largest fractional parts (ties by slot index).
    """
    w = np.asarray(w, dtype=float)
    if np.any(w < -1e-12):
        raise InvalidArgumentError("cannot round negative weights")
    w = np.clip(w, 0.0, None)
    if mode == "nearest":
        out = np.floor(w + 0.5)
    elif mode == "floor":
        out = np.floor(w)
    elif mode == "ceil":
        # float noise like 3.0000000001 should not become 4
        out = np.ceil(w - 1e-9)
    elif mode == "largest-remainder":
        total = w.sum()
        target = int(np.floor(total + 1e-9 * max(1.0, total)))
        out = np.floor(w)
        short = target - int(out.sum())
        if short > 0:
            frac = w - out
            idx = np.lexsort((np.arange(w.size), -frac))[:short]
            out[idx] += 1
    else:
        raise InvalidArgumentError(f"unknown rounding mode {mode!r}; choose from {ROUNDING_MODES}")
    return out.astype(np.int64)


def conflict_counts(data: ComparisonDataset, truth: RankingList) -> tuple[int, int]:
    """(votes consistent with ``truth``, votes conflicting with it)."""
    i, j = data.pairs
    consistent = truth.rank_of[i] < truth.rank_of[j]
    w = data.weights
    return int(w[consistent].sum()), int(w[~consistent].sum())
