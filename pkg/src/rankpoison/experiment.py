"""Budget-sweep experiment driver producing plot-ready CSV/JSON tables."""

from __future__ import annotations

import csv
import json
import logging
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .aggregator import RobustConfig, aggregate, aggregate_robust
from .attack_dynamic import DynamicAttackConfig, run_dynamic_attack
from .attack_random import RandomAttackConfig, run_random_attack
from .attack_static import StaticAttackConfig, run_static_attack
from .core import ComparisonDataset, InvalidArgumentError, RankingList, conflict_counts, rank_from_scores
from .data_io import SyntheticConfig, generate_synthetic
from .metrics import MetricReport

log = logging.getLogger(__name__)

DEFAULT_BUDGETS = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)
METHODS = ("static", "dynamic", "random", "none")


@dataclass
class ExperimentSpec:
    method: str = "static"
    budgets: tuple[float, ...] = DEFAULT_BUDGETS
    seeds: tuple[int, ...] = (0,)
    n: int = 10
    votes: int = 2000
    noise: float = 0.0
    kappa: float = 0.0
    rounding: str = "nearest"
    ks: tuple[int, ...] = (1,)
    s1: float = 0.05
    s2: float = 0.05
    rounds: int = 1
    robust: bool = False
    lam: float = 0.1
    timing_reps: int = 3
    out_dir: str = "results"
    # A fixed dataset replaces the synthetic generator; seeds then only drive the random attack.
    dataset: ComparisonDataset | None = field(default=None, repr=False)
    truth: RankingList | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgumentError(f"method must be one of {METHODS}")
        if not self.budgets:
            raise InvalidArgumentError("budget grid must be nonempty")
        if not self.seeds:
            raise InvalidArgumentError("need at least one seed")
        n = self.dataset.n if self.dataset is not None else self.n
        if any(not 1 <= k <= n for k in self.ks):
            raise InvalidArgumentError(f"every k must lie in 1..{n}")
        if self.timing_reps < 1:
            raise InvalidArgumentError("timing_reps must be at least 1")

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("dataset")
        d.pop("truth")
        d["source"] = "file" if self.dataset is not None else "synthetic"
        return d


def _budget_label(budget) -> str:
    return budget if isinstance(budget, str) else f"{budget:g}"


def _aggregate(spec: ExperimentSpec, data: ComparisonDataset):
    if spec.robust:
        return aggregate_robust(data, None, RobustConfig(lam=spec.lam)).scores
    return aggregate(data)


def _attack(spec: ExperimentSpec, data: ComparisonDataset, budget: float, seed: int):
    """Return (poisoned dataset, dosage bound or None)."""
    if spec.method == "static":
        res = run_static_attack(data, StaticAttackConfig(budget, spec.kappa, spec.rounding))
        return res.poisoned(data), (1 + spec.kappa) * data.total
    if spec.method == "dynamic":
        cfg = DynamicAttackConfig(
            budget, spec.kappa, max_rounds=spec.rounds, rounding=spec.rounding, robust=spec.robust, lam=spec.lam
        )
        return run_dynamic_attack(data, cfg).poisoned, (1 + spec.kappa) * data.total
    if spec.method == "random":
        return run_random_attack(data, RandomAttackConfig(spec.s1, spec.s2, seed=seed)).poisoned, None
    return data, None


def _instances(spec: ExperimentSpec):
    for seed in spec.seeds:
        if spec.dataset is not None:
            truth = spec.truth if spec.truth is not None else rank_from_scores(aggregate(spec.dataset))
            yield seed, spec.dataset, truth
        else:
            data, truth = generate_synthetic(SyntheticConfig(spec.n, spec.votes, spec.noise, seed))
            yield seed, data, truth


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run every (budget, seed) cell and write the output tables to ``spec.out_dir``.

    A failing cell is recorded with its error and the sweep carries on.
    """
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    budgets = [f"{spec.s1:g}/{spec.s2:g}"] if spec.method == "random" else list(spec.budgets)
    if spec.method == "none":
        budgets = []

    table, conflicts, timing, failures = [], [], [], []
    changes: dict[str, list] = {}

    def metric_rows(method, label, seed, truth, scores, extra):
        ranking = rank_from_scores(scores)
        rows = []
        for k in spec.ks:
            row = {"method": method, "budget": label, "seed": seed}
            row.update(MetricReport.compute(truth, ranking, k).to_json())
            row.update(extra)
            rows.append(row)
        return rows, ranking

    for seed, data, truth in _instances(spec):
        rows, _ = metric_rows(
            "original", "", seed, truth, _aggregate(spec, data),
            {"total_weight": data.total, "dosage_ok": True, "status": "ok"},
        )
        table.extend(rows)
        cons, conf = conflict_counts(data, truth)
        conflicts.append({"method": "original", "budget": "", "seed": seed, "consistent": cons,
                          "conflicting": conf, "kendall_tau": rows[0]["kendall_tau"]})
        i, j = data.pairs
        for budget in budgets:
            label = _budget_label(budget)
            try:
                elapsed = []
                for _ in range(spec.timing_reps):
                    t0 = time.perf_counter()
                    poisoned, bound = _attack(spec, data, budget, seed)
                    elapsed.append(time.perf_counter() - t0)
                total = poisoned.total
                if bound is None:
                    ok = True
                elif spec.rounding in ("largest-remainder", "floor"):
                    ok = total <= bound + 1e-9
                else:
                    ok = total <= bound + data.num_slots + 1e-9
                rows, _ = metric_rows(
                    spec.method, label, seed, truth, _aggregate(spec, poisoned),
                    {"total_weight": total, "dosage_ok": ok, "status": "ok"},
                )
                table.extend(rows)
                cons, conf = conflict_counts(poisoned, truth)
                conflicts.append({"method": spec.method, "budget": label, "seed": seed, "consistent": cons,
                                  "conflicting": conf, "kendall_tau": rows[0]["kendall_tau"]})
                delta = poisoned.weights - data.weights
                for s in np.flatnonzero(delta):
                    changes.setdefault(label, []).append(
                        {"seed": seed, "slot": int(s), "i": int(i[s]), "j": int(j[s]), "delta": int(delta[s])}
                    )
                changes.setdefault(label, [])
                timing.append({"method": spec.method, "budget": label, "seed": seed, "n": data.n,
                               "median_ms": 1000 * statistics.median(elapsed)})
            except Exception as exc:  # keep sweeping; the row carries the failure
                log.warning("cell %s/%s seed %s failed: %s", spec.method, label, seed, exc)
                msg = f"{type(exc).__name__}: {exc}"
                failures.append({"budget": label, "seed": seed, "error": msg})
                table.append({"method": spec.method, "budget": label, "seed": seed, "status": msg})

    _write_csv(out / "table.csv", table, ["method", "budget", "seed", "k", "kendall_tau", "r_rank", "p_at_k",
                                          "ap_at_k", "ndcg_at_k", "total_weight", "dosage_ok", "status"])
    for label, rows in changes.items():
        _write_csv(out / f"changes_{label.replace('/', '_')}.csv", rows, ["seed", "slot", "i", "j", "delta"])
    _write_csv(out / "conflict_counts.csv", conflicts,
               ["method", "budget", "seed", "consistent", "conflicting", "kendall_tau"])
    _write_csv(out / "timing.csv", timing, ["method", "budget", "seed", "n", "median_ms"])

    summary = {}
    for label in ["", *(_budget_label(b) for b in budgets)]:
        taus = [r["kendall_tau"] for r in table
                if r["budget"] == label and r.get("status") == "ok" and r.get("k") == spec.ks[0]]
        if taus:
            summary[label or "original"] = {"median_kendall_tau": statistics.median(taus), "cells": len(taus)}
    report = {"spec": spec.to_json(), "summary": summary, "failures": failures,
              "dosage_ok": all(r.get("dosage_ok", True) for r in table)}
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def _write_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
