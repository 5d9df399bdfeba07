"""Static poisoning attack: Wasserstein-DRO worst-case scores and the toxic distribution.

Pipeline: frequencies ``p = w0 / M0`` -> worst-case scores minimizing
``L(theta) + R(theta)`` -> dual multiplier -> closed-form toxic frequencies ->
scaled, rounded integer weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ComparisonDataset,
    ConvergenceError,
    FloatArray,
    FrequencyVector,
    IntArray,
    InvalidArgumentError,
    ROUNDING_MODES,
    ScoreVector,
    round_weights,
)

log = logging.getLogger(__name__)

SQRT_EPS = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    step: float = 1.0
    max_iters: int = 10000
    grad_tol: float = 1e-8
    armijo: float = 1e-4


@dataclass(frozen=True)
class StaticAttackConfig:
    alpha: float
    kappa: float = 0.0
    rounding: str = "nearest"
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidArgumentError("alpha must be positive")
        if self.kappa < 0:
            raise InvalidArgumentError("kappa must be nonnegative")
        if self.rounding not in ROUNDING_MODES:
            raise InvalidArgumentError(f"unknown rounding {self.rounding!r}")


@dataclass
class StaticAttackResult:
    theta_star: ScoreVector
    lambda_star: float
    q_star: FrequencyVector
    poisoned_weights: IntArray
    objective: float
    iterations: int
    grad_norm: float

    def poisoned(self, data: ComparisonDataset) -> ComparisonDataset:
        return data.with_weights(self.poisoned_weights)

    def to_json(self) -> dict:
        return {
            "theta_star": self.theta_star.theta.tolist(),
            "lambda_star": self.lambda_star,
            "q_star": self.q_star.values.tolist(),
            "objective": self.objective,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
        }


class DROObjective:
    """``F(theta) = L(theta) + R(theta)`` on a fixed design.

    ``L = (1/2N) sum p r^2`` and ``R = sqrt(alpha/(4N) sum r^2)`` with residuals
    ``r = 1 - B theta``. Gradients use ``SQRT_EPS`` inside the root; ``value``
    and ``reg`` are exact.
    """

    def __init__(self, data: ComparisonDataset, p, alpha: float):
        self.n = data.n
        self.N = data.num_slots
        self.i, self.j = data.pairs
        self.p = p.values if isinstance(p, FrequencyVector) else np.asarray(p, dtype=float)
        self.alpha = float(alpha)

    def residuals(self, theta: FloatArray) -> FloatArray:
        return 1.0 - (theta[self.i] - theta[self.j])

    def loss(self, theta: FloatArray) -> float:
        r = self.residuals(theta)
        return float(np.dot(self.p, r * r) / (2 * self.N))

    def reg(self, theta: FloatArray) -> float:
        r = self.residuals(theta)
        return float(np.sqrt(self.alpha / (4 * self.N) * np.dot(r, r)))

    def value(self, theta: FloatArray) -> float:
        return self.loss(theta) + self.reg(theta)

    def smoothed_value(self, theta: FloatArray) -> float:
        """The function the solver descends: ``SQRT_EPS`` inside the root keeps it differentiable."""
        return self.value_and_grad(theta)[0]

    def _bt(self, x: FloatArray) -> FloatArray:
        return np.bincount(self.i, weights=x, minlength=self.n) - np.bincount(
            self.j, weights=x, minlength=self.n
        )

    def value_and_grad(self, theta: FloatArray) -> tuple[float, FloatArray]:
        r = self.residuals(theta)
        loss = np.dot(self.p, r * r) / (2 * self.N)
        reg = np.sqrt(self.alpha / (4 * self.N) * np.dot(r, r) + SQRT_EPS)
        # dr/dtheta = -B, so both gradients carry a minus sign
        coeff = self.p / self.N + self.alpha / (4 * self.N * reg)
        return float(loss + reg), -self._bt(coeff * r)

    def grad(self, theta: FloatArray) -> FloatArray:
        return self.value_and_grad(theta)[1]


def solve_worst_case_theta(
    data: ComparisonDataset,
    p,
    alpha: float,
    solver: SolverConfig | None = None,
    theta0=None,
) -> tuple[ScoreVector, dict]:
    """Minimize ``L + R`` by gradient descent with Armijo backtracking.

    The gradient always sums to zero, so iterates stay on the mean-zero
    subspace without an explicit projection. Raises ConvergenceError when
    ``||grad||_inf > grad_tol`` after ``max_iters`` steps.
    """
    if not alpha > 0:
        raise InvalidArgumentError("alpha must be positive")
    solver = solver or SolverConfig()
    obj = DROObjective(data, p, alpha)
    if abs(obj.p.sum() - 1.0) > 1e-9:
        raise InvalidArgumentError("p must be normalized")
    theta = np.zeros(data.n) if theta0 is None else np.asarray(theta0, dtype=float) - np.mean(theta0)
    f, g = obj.value_and_grad(theta)
    step = solver.step
    gnorm = float(np.max(np.abs(g)))
    it = 0
    while gnorm > solver.grad_tol:
        if it >= solver.max_iters:
            raise ConvergenceError(
                f"gradient descent stopped after {it} iterations with ||grad||_inf={gnorm:.3e}",
                theta,
                gnorm,
            )
        it += 1
        gg = float(np.dot(g, g))
        while True:
            cand = theta - step * g
            f_new, g_new = obj.value_and_grad(cand)
            if f_new <= f - solver.armijo * step * gg:
                break
            step *= 0.5
            if step < 1e-20:
                # numerically flat: no representable descent left
                raise ConvergenceError(
                    f"line search collapsed at iteration {it} with ||grad||_inf={gnorm:.3e}",
                    theta,
                    gnorm,
                )
        theta, f, g = cand, f_new, g_new
        gnorm = float(np.max(np.abs(g)))
        step *= 2.0
    theta = theta - theta.mean()
    return ScoreVector(theta), {"objective": obj.value(theta), "iterations": it, "grad_norm": gnorm}


def dual_lambda(theta_star, data: ComparisonDataset, alpha: float) -> float:
    """``sqrt(sum r^2 / (16 N alpha))`` at the worst-case scores."""
    if not alpha > 0:
        raise InvalidArgumentError("alpha must be positive")
    t = theta_star.theta if isinstance(theta_star, ScoreVector) else np.asarray(theta_star, dtype=float)
    i, j = data.pairs
    r = 1.0 - (t[i] - t[j])
    return float(np.sqrt(np.dot(r, r) / (16 * data.num_slots * alpha)))


def dual_objective(theta, data: ComparisonDataset, p, alpha: float, lam: float) -> float:
    """Dual of the worst-case expected loss at multiplier ``lam``.

    ``lam * alpha + L(theta) + sum r^2 / (16 lam N)``; minimized over ``lam``
    it equals ``L + R`` and the minimizer is :func:`dual_lambda`.
    """
    if not lam > 0:
        return float("inf")
    obj = DROObjective(data, p, alpha)
    t = theta.theta if isinstance(theta, ScoreVector) else np.asarray(theta, dtype=float)
    r = obj.residuals(t)
    return float(lam * alpha + obj.loss(t) + np.dot(r, r) / (16 * lam * obj.N))


def toxic_distribution(theta_star, lambda_star: float, p, data: ComparisonDataset) -> FrequencyVector:
    """Per-slot maximizer ``q = p + r^2 / (4 lambda)``, renormalized to the simplex.

    With ``lambda_star == 0`` the scores interpolate every slot; ``p`` is
    returned unchanged and a warning is logged.
    """
    pv = p.values if isinstance(p, FrequencyVector) else np.asarray(p, dtype=float)
    if lambda_star < 0:
        raise InvalidArgumentError("lambda_star must be nonnegative")
    if lambda_star == 0:
        log.warning("dual multiplier is zero; toxic distribution equals p")
        return FrequencyVector(pv / pv.sum(), normalized=True)
    t = theta_star.theta if isinstance(theta_star, ScoreVector) else np.asarray(theta_star, dtype=float)
    i, j = data.pairs
    r = 1.0 - (t[i] - t[j])
    q = pv + r * r / (4.0 * lambda_star)
    return FrequencyVector(q / q.sum(), normalized=True)


def run_static_attack(data: ComparisonDataset, cfg: StaticAttackConfig) -> StaticAttackResult:
    m0 = data.total
    p = data.frequencies()
    theta_star, info = solve_worst_case_theta(data, p, cfg.alpha, cfg.solver)
    lam = dual_lambda(theta_star, data, cfg.alpha)
    q = toxic_distribution(theta_star, lam, p, data)
    w_real = m0 * (1.0 + cfg.kappa) * q.values
    w = round_weights(w_real, cfg.rounding)
    return StaticAttackResult(
        theta_star=theta_star,
        lambda_star=lam,
        q_star=q,
        poisoned_weights=w,
        objective=info["objective"],
        iterations=info["iterations"],
        grad_norm=info["grad_norm"],
    )
