"""Command-line front end.

Every flag can also come from an INI file given with ``--config``; keys live
in a ``[defaults]`` section or in a section named after the subcommand, and
explicit command-line flags win over both.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .aggregator import RobustConfig, aggregate, aggregate_robust
from .attack_dynamic import DynamicAttackConfig, run_dynamic_attack
from .attack_random import RandomAttackConfig, run_random_attack
from .attack_static import StaticAttackConfig, run_static_attack
from .core import ROUNDING_MODES, ConvergenceError, rank_from_scores
from .data_io import (
    SyntheticConfig,
    generate_synthetic,
    ingest_ballots,
    ranking_to_scores,
    read_ballots,
    read_dataset,
    read_scores,
    subsample_votes,
    write_dataset,
    write_metrics,
    write_scores,
)
from .experiment import DEFAULT_BUDGETS, METHODS, ExperimentSpec, run_experiment
from .metrics import MetricReport


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _load_dataset(path: str):
    """Comparison CSV, or a ballot file when the name ends in ``.txt``/``.soi``/``.soc``."""
    if Path(path).suffix in (".txt", ".soi", ".soc"):
        return ingest_ballots(read_ballots(path))
    return read_dataset(path)


def _add_attack_flags(p: argparse.ArgumentParser, budget_list: bool) -> None:
    p.add_argument("--method", choices=METHODS if budget_list else METHODS[:3], default="static")
    if budget_list:
        p.add_argument("--budgets", type=_float_list, default=list(DEFAULT_BUDGETS),
                       help="comma-separated alpha (static) / rho (dynamic) grid")
    else:
        p.add_argument("--budget", type=float, default=1e-3, help="alpha (static) or rho (dynamic)")
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--rounding", choices=ROUNDING_MODES, default="nearest")
    p.add_argument("--s1", type=float, default=0.05, help="random attack: inject fraction")
    p.add_argument("--s2", type=float, default=0.05, help="random attack: delete fraction")
    p.add_argument("--rounds", type=int, default=1, help="dynamic attack: leader-follower rounds")
    p.add_argument("--robust", type=_bool, nargs="?", const=True, default=False,
                   help="use the outlier-robust ranker")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="robust ranker sparsity weight")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="rankpoison", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="INI file with default flag values")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("generate", help="synthetic comparisons with a planted order")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--votes", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True, help="comparison CSV to write")
    p.add_argument("--truth-out", help="scores CSV for the planted order (default: <out>.truth.csv)")
    subs["generate"] = p

    p = sub.add_parser("aggregate", help="fit ranking scores")
    p.add_argument("data")
    p.add_argument("-o", "--out", required=True, help="scores CSV to write")
    p.add_argument("--robust", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    subs["aggregate"] = p

    p = sub.add_parser("attack", help="poison a dataset")
    p.add_argument("data")
    p.add_argument("-o", "--out", required=True, help="poisoned comparison CSV to write")
    p.add_argument("--seed", type=int, default=0, help="random attack seed")
    p.add_argument("--diagnostics", help="optional JSON file for attack diagnostics")
    _add_attack_flags(p, budget_list=False)
    subs["attack"] = p

    p = sub.add_parser("evaluate", help="compare scores against a reference ranking")
    p.add_argument("--truth", required=True, help="scores CSV of the reference ranking")
    p.add_argument("--scores", required=True, help="scores CSV to evaluate")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("-o", "--out", help="metrics JSON to write (also printed)")
    subs["evaluate"] = p

    p = sub.add_parser("experiment", help="budget sweep with table outputs")
    p.add_argument("--data", help="comparison CSV or ballot file instead of synthetic data")
    p.add_argument("--truth", help="scores CSV of the reference ranking for --data")
    p.add_argument("--subsample", type=float, help="keep this fraction of the --data votes")
    p.add_argument("--subsample-seed", type=int, default=0)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--votes", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--k", type=_int_list, default=[1], help="comma-separated K values")
    p.add_argument("--timing-reps", type=int, default=3)
    p.add_argument("--out-dir", default="results")
    _add_attack_flags(p, budget_list=True)
    subs["experiment"] = p
    return parser, subs


def _apply_config(path: str, command: str, sub: argparse.ArgumentParser) -> None:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(f"config file not found: {path}")
    values = {}
    for section in ("defaults", command):
        if cp.has_section(section):
            values.update(cp.items(section))
    actions = {a.dest: a for a in sub._actions}
    for opt in sub._actions:
        for flag in opt.option_strings:
            actions[flag.lstrip("-").replace("-", "_")] = opt
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key.replace("-", "_"))
        if action is None:
            raise ValueError(f"config: unknown key {key!r} for {command}")
        conv = action.type or str
        defaults[action.dest] = conv(raw)
        action.required = False
    sub.set_defaults(**defaults)


def _cmd_generate(a) -> int:
    data, truth = generate_synthetic(SyntheticConfig(a.n, a.votes, a.noise, a.seed))
    write_dataset(data, a.out)
    truth_path = a.truth_out or str(Path(a.out).with_suffix("")) + ".truth.csv"
    write_scores(ranking_to_scores(truth), truth_path)
    print(f"wrote {a.out} ({data.total} votes) and {truth_path}")
    return 0


def _cmd_aggregate(a) -> int:
    data = _load_dataset(a.data)
    scores = aggregate_robust(data, None, RobustConfig(lam=a.lam)).scores if a.robust else aggregate(data)
    write_scores(scores, a.out)
    return 0


def _cmd_attack(a) -> int:
    data = _load_dataset(a.data)
    if a.method == "static":
        res = run_static_attack(data, StaticAttackConfig(a.budget, a.kappa, a.rounding))
        poisoned, diag = res.poisoned(data), res.to_json()
    elif a.method == "dynamic":
        cfg = DynamicAttackConfig(a.budget, a.kappa, max_rounds=a.rounds, rounding=a.rounding,
                                  robust=a.robust, lam=a.lam)
        res = run_dynamic_attack(data, cfg)
        poisoned, diag = res.poisoned, res.diagnostics()
    else:
        res = run_random_attack(data, RandomAttackConfig(a.s1, a.s2, seed=a.seed))
        poisoned, diag = res.poisoned, res.diagnostics
    write_dataset(poisoned, a.out)
    if a.diagnostics:
        Path(a.diagnostics).write_text(json.dumps(diag, indent=2) + "\n")
    print(f"wrote {a.out}: {data.total} -> {poisoned.total} votes, "
          f"l1 change {int(np.abs(poisoned.weights - data.weights).sum())}")
    return 0


def _cmd_evaluate(a) -> int:
    truth = rank_from_scores(read_scores(a.truth))
    other = rank_from_scores(read_scores(a.scores))
    report = MetricReport.compute(truth, other, a.k).to_json()
    if a.out:
        write_metrics(report, a.out)
    print(json.dumps(report))
    return 0


def _cmd_experiment(a) -> int:
    dataset = _load_dataset(a.data) if a.data else None
    if dataset is not None and a.subsample:
        dataset = subsample_votes(dataset, a.subsample, a.subsample_seed)
    truth = rank_from_scores(read_scores(a.truth)) if a.truth else None
    spec = ExperimentSpec(
        method=a.method, budgets=tuple(a.budgets), seeds=tuple(a.seeds), n=a.n, votes=a.votes,
        noise=a.noise, kappa=a.kappa, rounding=a.rounding, ks=tuple(a.k), s1=a.s1, s2=a.s2,
        rounds=a.rounds, robust=a.robust, lam=a.lam, timing_reps=a.timing_reps, out_dir=a.out_dir,
        dataset=dataset, truth=truth,
    )
    report = run_experiment(spec)
    print(json.dumps(report["summary"]))
    return 1 if report["failures"] else 0


COMMANDS = {
    "generate": _cmd_generate,
    "aggregate": _cmd_aggregate,
    "attack": _cmd_attack,
    "evaluate": _cmd_evaluate,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, subs = build_parser()
    pre_parser = argparse.ArgumentParser(add_help=False)
    pre_parser.add_argument("--config")
    pre, _ = pre_parser.parse_known_args(argv)
    command = next((tok for tok in argv if tok in COMMANDS), None)
    try:
        if pre.config and command:
            _apply_config(pre.config, command, subs[command])
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (OSError, ValueError) as exc:
        print(f"rankpoison: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, ConvergenceError) as exc:
        # one line, tagged with the module that raised
        origin = getattr(exc, "__traceback__", None)
        module = "rankpoison"
        while origin is not None:
            module = origin.tb_frame.f_globals.get("__name__", module)
            origin = origin.tb_next
        print(f"rankpoison: {args.command}: {module}: {exc}", file=sys.stderr)
        return 1
