"""Weighted least-squares ranking (HodgeRank-style) and its outlier-robust variant."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ComparisonDataset,
    DegenerateInputError,
    FloatArray,
    FrequencyVector,
    InvalidArgumentError,
    ScoreVector,
)


@dataclass(frozen=True)
class RidgeConfig:
    delta: float = 1e-8

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidArgumentError("ridge delta must be positive")


@dataclass(frozen=True)
class RobustConfig:
    lam: float = 0.1
    max_iters: int = 500
    tol: float = 1e-10

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidArgumentError("lambda must be nonnegative")
        if self.max_iters < 1 or not self.tol > 0:
            raise InvalidArgumentError("max_iters must be >= 1 and tol > 0")


@dataclass
class RobustResult:
    scores: ScoreVector
    gamma: FloatArray
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0


def _weight_vector(data: ComparisonDataset, weights) -> FloatArray:
    if weights is None:
        w = data.weights.astype(float)
    elif isinstance(weights, FrequencyVector):
        w = weights.values
    else:
        w = np.asarray(weights, dtype=float)
    if w.shape != (data.num_slots,):
        raise InvalidArgumentError(f"weights have shape {w.shape}, expected ({data.num_slots},)")
    if np.any(w < 0):
        raise InvalidArgumentError("weights must be nonnegative")
    if not np.any(w > 0):
        raise DegenerateInputError("all weights are zero; nothing to aggregate")
    return w


def _ridge_solve(data: ComparisonDataset, w: FloatArray, target: FloatArray, delta: float) -> FloatArray:
    """Solve ``(B^T W B + delta I) theta = B^T W target``."""
    n = data.n
    i, j = data.pairs
    # weighted graph Laplacian; slots (i,j) and (j,i) both land on edge {i,j}
    L = np.zeros((n, n))
    np.add.at(L, (i, j), -w)
    np.add.at(L, (j, i), -w)
    L[np.diag_indices(n)] = -L.sum(axis=1)
    wt = w * target
    rhs = np.bincount(i, weights=wt, minlength=n) - np.bincount(j, weights=wt, minlength=n)
    L[np.diag_indices(n)] += delta
    theta = np.linalg.solve(L, rhs)
    return theta - theta.mean()


def aggregate(data: ComparisonDataset, weights=None, cfg: RidgeConfig | None = None) -> ScoreVector:
    """Ranking scores minimizing ``1/2 ||1 - B theta||^2_w + delta/2 ||theta||^2``.

    ``weights`` defaults to the dataset's own vote counts; a FrequencyVector or
    any nonnegative real vector over the slots is also accepted.
    """
    cfg = cfg or RidgeConfig()
    w = _weight_vector(data, weights)
    return ScoreVector(_ridge_solve(data, w, np.ones(data.num_slots), cfg.delta))


def soft_threshold(x: FloatArray, t: float) -> FloatArray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def robust_objective(data: ComparisonDataset, w, theta, gamma, lam: float, delta: float = 0.0) -> float:
    i, j = data.pairs
    t = np.asarray(theta, dtype=float)
    r = 1.0 - gamma - (t[i] - t[j])
    return float(0.5 * np.dot(w, r * r) + lam * np.dot(w, np.abs(gamma)) + 0.5 * delta * np.dot(t, t))


def aggregate_robust(
    data: ComparisonDataset,
    weights=None,
    cfg: RobustConfig | None = None,
    ridge: RidgeConfig | None = None,
) -> RobustResult:
    """Alternating minimization over scores and a sparse per-slot outlier vector.

    Minimizes ``1/2 sum w_e (1 - gamma_e - theta_i + theta_j)^2 + lam sum w_e |gamma_e|``
    (plus the ridge term). Slots with zero weight keep ``gamma_e = 0``.
    With ``lam = 0`` every residual is absorbed by gamma and the scores carry
    no information; that setting is allowed but degenerate.
    """
    cfg = cfg or RobustConfig()
    ridge = ridge or RidgeConfig()
    w = _weight_vector(data, weights)
    i, j = data.pairs
    active = w > 0
    ones = np.ones(data.num_slots)

    gamma = np.zeros(data.num_slots)
    theta = _ridge_solve(data, w, ones, ridge.delta)
    trace = [robust_objective(data, w, theta, gamma, cfg.lam, ridge.delta)]
    it = 0
    for it in range(1, cfg.max_iters + 1):
        resid = 1.0 - (theta[i] - theta[j])
        gamma_new = np.where(active, soft_threshold(resid, cfg.lam), 0.0)
        theta_new = _ridge_solve(data, w, ones - gamma_new, ridge.delta)
        step = max(np.max(np.abs(theta_new - theta)), np.max(np.abs(gamma_new - gamma)))
        theta, gamma = theta_new, gamma_new
        trace.append(robust_objective(data, w, theta, gamma, cfg.lam, ridge.delta))
        if step < cfg.tol:
            break
    return RobustResult(ScoreVector(theta), gamma, trace, it)
