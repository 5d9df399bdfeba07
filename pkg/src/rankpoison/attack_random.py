"""Random-perturbation baseline: delete existing votes, inject random ones."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ComparisonDataset, DegenerateInputError, InvalidArgumentError


@dataclass(frozen=True)
class RandomAttackConfig:
    s1: float = 0.0  # inject fraction
    s2: float = 0.0  # delete fraction
    b: int | None = None
    l: int | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("s1", "s2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [0, 1]")
        if self.b is not None and self.b < 0:
            raise InvalidArgumentError("b must be nonnegative")
        if self.l is not None and self.l < 0:
            raise InvalidArgumentError("l must be nonnegative")


@dataclass
class RandomAttackResult:
    poisoned: ComparisonDataset
    deleted: int
    injected: int
    requested_delete: int
    requested_inject: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def truncated(self) -> bool:
        return self.deleted < self.requested_delete or self.injected < self.requested_inject


def run_random_attack(data: ComparisonDataset, cfg: RandomAttackConfig) -> RandomAttackResult:
    """Delete ``round(s2 M0)`` votes without replacement, then inject ``round(s1 M0)``.

    Without caps both steps are vectorized draws. With caps every unit change
    is applied in a random order and skipped when it would break
    ``||w - w0||_1 <= b`` or ``||w - w0||_inf <= l``.
    """
    m0 = data.total
    if m0 <= 0:
        raise DegenerateInputError("dataset has zero total weight")
    rng = np.random.default_rng(cfg.seed)
    w0 = data.weights
    n_del = int(round(cfg.s2 * m0))
    n_add = int(round(cfg.s1 * m0))
    removed = rng.multivariate_hypergeometric(w0, n_del) if n_del else np.zeros_like(w0)
    added = (
        rng.multinomial(n_add, np.full(w0.size, 1.0 / w0.size)).astype(np.int64)
        if n_add
        else np.zeros_like(w0)
    )

    if cfg.b is None and cfg.l is None:
        w = w0 - removed + added
        return RandomAttackResult(data.with_weights(w), n_del, n_add, n_del, n_add, {"truncated": False})

    # capped: replay the unit events and keep only those that fit
    events = np.concatenate(
        [
            np.stack([np.repeat(np.arange(w0.size), removed), np.full(n_del, -1)], axis=1),
            np.stack([np.repeat(np.arange(w0.size), added), np.full(n_add, 1)], axis=1),
        ]
    ).astype(np.int64)
    events = events[rng.permutation(len(events))]
    w = w0.copy()
    b = np.inf if cfg.b is None else cfg.b
    l = np.inf if cfg.l is None else cfg.l
    l1 = 0
    deleted = injected = 0
    for slot, sign in events:
        before = abs(w[slot] - w0[slot])
        after = abs(w[slot] + sign - w0[slot])
        if w[slot] + sign < 0 or after > l or l1 + after - before > b:
            continue
        w[slot] += sign
        l1 += after - before
        if sign < 0:
            deleted += 1
        else:
            injected += 1
    result = RandomAttackResult(data.with_weights(w), deleted, injected, n_del, n_add)
    result.diagnostics = {
        "truncated": result.truncated,
        "deleted": deleted,
        "injected": injected,
        "requested_delete": n_del,
        "requested_inject": n_add,
    }
    return result
