"""Poisoning attacks on least-squares rank aggregation from pairwise comparisons."""

from .aggregator import RidgeConfig, RobustConfig, aggregate, aggregate_robust
from .attack_dynamic import DynamicAttackConfig, run_dynamic_attack, worst_case_frequency
from .attack_random import RandomAttackConfig, run_random_attack
from .attack_static import StaticAttackConfig, run_static_attack
from .core import (
    AttackBudget,
    ComparisonDataset,
    ConvergenceError,
    DegenerateInputError,
    FrequencyVector,
    InvalidArgumentError,
    ParseError,
    RankingList,
    ScoreVector,
    build_full_design,
    rank_from_scores,
)
from .data_io import SyntheticConfig, generate_synthetic
from .metrics import MetricReport, kendall_tau

__version__ = "0.1.0"
