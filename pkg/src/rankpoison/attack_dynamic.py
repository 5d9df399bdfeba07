"""Dynamic (leader-follower) poisoning attack over a chi-square ball.

Given the ranker's current fit, the attacker picks the frequency vector ``q``
maximizing the expected per-slot loss ``<q, z>`` subject to

    1/2 ||q - p||^2 <= rho ||p||^2,   q >= 0,   sum(q) = 1.

The inner problem is solved through its one-dimensional dual: for a multiplier
``mu`` the minimizer is the simplex projection of ``p + z/mu``, and ``mu`` is
bisected on the sign of ``g'(mu) = 1/2 ||q(mu) - p||^2 - rho ||p||^2``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .aggregator import RidgeConfig, RobustConfig, aggregate, aggregate_robust
from .core import (
    ComparisonDataset,
    FloatArray,
    FrequencyVector,
    IntArray,
    InvalidArgumentError,
    ROUNDING_MODES,
    ScoreVector,
    round_weights,
)

# Set by the test suite; every worst-case solve then asserts ball membership.
CHECK_INVARIANTS = os.environ.get("RANKPOISON_CHECK_INVARIANTS", "") not in ("", "0")

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class DynamicAttackConfig:
    rho: float
    kappa: float = 0.0
    epsilon: float = 1e-10
    max_rounds: int = 1
    rounding: str = "nearest"
    robust: bool = False
    lam: float = 0.1
    ridge: RidgeConfig = field(default_factory=RidgeConfig)

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidArgumentError("rho must be positive")
        if not self.epsilon > 0:
            raise InvalidArgumentError("epsilon must be positive")
        if self.max_rounds < 1:
            raise InvalidArgumentError("max_rounds must be at least 1")
        if self.kappa < 0:
            raise InvalidArgumentError("kappa must be nonnegative")
        if self.rounding not in ROUNDING_MODES:
            raise InvalidArgumentError(f"unknown rounding {self.rounding!r}")


@dataclass(frozen=True)
class ChiSquareBall:
    center: FrequencyVector
    rho: float

    def __post_init__(self):
        if not self.center.normalized:
            raise InvalidArgumentError("ball center must be a normalized frequency vector")
        if not self.rho > 0:
            raise InvalidArgumentError("rho must be positive")

    @property
    def radius_sq(self) -> float:
        """Right-hand side ``rho ||p||^2`` of the quadratic constraint."""
        p = self.center.values
        return self.rho * float(np.dot(p, p))

    def divergence(self, q) -> float:
        q = q.values if isinstance(q, FrequencyVector) else np.asarray(q, dtype=float)
        d = q - self.center.values
        return 0.5 * float(np.dot(d, d))

    def contains(self, q, tol: float = MEMBERSHIP_TOL) -> bool:
        qv = q.values if isinstance(q, FrequencyVector) else np.asarray(q, dtype=float)
        return bool(
            np.all(qv >= 0)
            and abs(qv.sum() - 1.0) <= tol
            and self.divergence(qv) <= self.radius_sq + tol
        )


@dataclass
class WorstCaseResult:
    q: FrequencyVector
    mu: float
    eta: float
    index: int
    iterations: int
    value: float  # <q, z> for the caller's (un-negated) z


@dataclass
class DynamicAttackResult:
    poisoned: ComparisonDataset
    q: FrequencyVector
    rounds: int
    converged: bool
    worst_case: WorstCaseResult
    theta: ScoreVector

    @property
    def poisoned_weights(self) -> IntArray:
        return self.poisoned.weights

    def diagnostics(self) -> dict:
        wc = self.worst_case
        return {
            "mu": wc.mu,
            "eta": wc.eta,
            "index": wc.index,
            "bisection_iterations": wc.iterations,
            "rounds": self.rounds,
            "converged": self.converged,
            "q_dot_z": wc.value,
        }


def edge_objective(theta, data: ComparisonDataset, gamma=None, lam: float = 0.0) -> FloatArray:
    """Per-slot loss ``1/2 (1 - gamma_e - theta_i + theta_j)^2 + lam |gamma_e|``.

    Without ``gamma`` this is the plain squared-residual term and ``lam`` is ignored.
    """
    t = theta.theta if isinstance(theta, ScoreVector) else np.asarray(theta, dtype=float)
    i, j = data.pairs
    r = 1.0 - (t[i] - t[j])
    if gamma is None:
        return 0.5 * r * r
    g = np.asarray(gamma, dtype=float)
    if g.shape != r.shape:
        raise InvalidArgumentError(f"gamma has shape {g.shape}, expected {r.shape}")
    return 0.5 * (r - g) ** 2 + lam * np.abs(g)


def _shift_sorted(v_desc: FloatArray, csum: FloatArray) -> tuple[float, int]:
    """Index search on a descending-sorted vector with prefix sums ``csum``.

    Finds the largest 1-based ``i`` with ``sum_{j<=i} (v_j - v_i) < 1`` by
    bisection (the left-hand side is nondecreasing in ``i``) and returns the
    shift ``eta = (csum_i - 1) / i`` that makes ``sum (v - eta)_+ = 1``.
    """
    N = v_desc.size

    def gap(k: int) -> float:  # sum_{j<=k} (v_j - v_k), 1-based k
        return csum[k - 1] - k * v_desc[k - 1]

    if gap(N) < 1.0:
        i = N
    else:
        lo, hi = 1, N  # gap(lo) = 0 < 1 <= gap(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if gap(mid) < 1.0:
                lo = mid
            else:
                hi = mid
        i = lo
    return (csum[i - 1] - 1.0) / i, i


def _sorted_desc(v: FloatArray) -> IntArray:
    # stable: equal entries keep slot order
    return np.argsort(-v, kind="stable")


def find_shift(z, p, mu: float) -> tuple[float, int]:
    """Shift ``eta`` and support size ``i`` projecting ``p - z/mu`` onto the simplex.

    ``z`` is the (centered) objective of the minimization form. The returned
    ``eta`` satisfies ``sum (p - z/mu - eta)_+ = 1``.
    """
    if not mu > 0:
        raise InvalidArgumentError("mu must be positive")
    v = np.asarray(p, dtype=float) - np.asarray(z, dtype=float) / mu
    order = _sorted_desc(v)
    vs = v[order]
    return _shift_sorted(vs, np.cumsum(vs))


def _project(v: FloatArray) -> tuple[FloatArray, float, int]:
    order = _sorted_desc(v)
    vs = v[order]
    eta, i = _shift_sorted(vs, np.cumsum(vs))
    return np.maximum(v - eta, 0.0), eta, i


def worst_case_search(z, p, rho: float, epsilon: float = 1e-10) -> WorstCaseResult:
    """Maximize ``<q, z>`` over the chi-square ball around ``p``; full diagnostics.

    The bisection keeps ``mu_max`` feasible throughout (the initial upper
    bound already is), and the returned ``q`` is taken at ``mu_max``, so ball
    membership holds up to floating-point rounding.
    """
    pv = p.values if isinstance(p, FrequencyVector) else np.asarray(p, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.shape != pv.shape:
        raise InvalidArgumentError(f"z has shape {z.shape}, p has shape {pv.shape}")
    if abs(pv.sum() - 1.0) > 1e-9 or np.any(pv < 0):
        raise InvalidArgumentError("p must be a normalized frequency vector")
    if not (rho > 0 and epsilon > 0):
        raise InvalidArgumentError("rho and epsilon must be positive")

    # minimization form: minimize <q, -z>, centered
    zc = -(z - z.mean())
    pp = float(np.dot(pv, pv))
    budget = rho * pp
    z_inf = float(np.max(np.abs(zc)))
    if z_inf <= 1e-15 * max(1.0, float(np.max(np.abs(z)))):
        q = FrequencyVector(pv / pv.sum(), normalized=True)
        return WorstCaseResult(q, float("inf"), 0.0, pv.size, 0, float(np.dot(q.values, z)))

    mu_inf = max(z_inf, np.sqrt(1.0 / budget) * float(np.linalg.norm(zc)))
    mu_lo, mu_hi = 0.0, mu_inf
    q_hi, eta_hi, i_hi = _project(pv - zc / mu_hi)
    iterations = 0
    while mu_hi - mu_lo > epsilon * mu_inf:
        iterations += 1
        mu = 0.5 * (mu_lo + mu_hi)
        q_mu, eta, i = _project(pv - zc / mu)
        d = q_mu - pv
        if 0.5 * float(np.dot(d, d)) - budget > 0:
            mu_lo = mu
        else:
            mu_hi, q_hi, eta_hi, i_hi = mu, q_mu, eta, i

    q_hi = q_hi / q_hi.sum()
    q = FrequencyVector(q_hi, normalized=True)
    result = WorstCaseResult(q, mu_hi, float(eta_hi), int(i_hi), iterations, float(np.dot(q_hi, z)))
    if CHECK_INVARIANTS:
        ball = ChiSquareBall(FrequencyVector(pv / pv.sum(), normalized=True), rho)
        assert ball.contains(q), (
            f"worst-case q left the ball: divergence {ball.divergence(q)!r} > {ball.radius_sq!r}"
        )
    return result


def worst_case_frequency(z, p, rho: float, epsilon: float = 1e-10) -> FrequencyVector:
    """Worst-case frequency in the chi-square ball (maximizes ``<q, z>``)."""
    return worst_case_search(z, p, rho, epsilon).q


def _ranker(data: ComparisonDataset, weights, cfg: DynamicAttackConfig):
    if cfg.robust:
        res = aggregate_robust(data, weights, RobustConfig(lam=cfg.lam), cfg.ridge)
        return res.scores, res.gamma
    return aggregate(data, weights, cfg.ridge), None


def run_dynamic_attack(data: ComparisonDataset, cfg: DynamicAttackConfig) -> DynamicAttackResult:
    """Leader-follower rounds: fit, score slots, move to the worst case, round.

    Stops after ``max_rounds`` or once the rounded weights stop changing.
    """
    m0 = data.total
    p = data.frequencies()
    w = data.weights
    converged = False
    rounds = 0
    wc = None
    theta = None
    for rounds in range(1, cfg.max_rounds + 1):
        theta, gamma = _ranker(data, w, cfg)
        z = edge_objective(theta, data, gamma, cfg.lam if gamma is not None else 0.0)
        wc = worst_case_search(z, p, cfg.rho, cfg.epsilon)
        w_new = round_weights((1.0 + cfg.kappa) * m0 * wc.q.values, cfg.rounding)
        if np.array_equal(w_new, w):
            converged = True
            w = w_new
            break
        w = w_new
    return DynamicAttackResult(data.with_weights(w), wc.q, rounds, converged, wc, theta)
