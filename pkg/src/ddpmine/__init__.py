"""Federated frequent pattern mining with distributed discrete noise and
simulated secure aggregation."""

from .analyst import AnalystConfig, FilterDecision, Strategy
from .data import SyntheticSpec, generate_synthetic, load_dataset, write_dataset
from .patterns import LocalData, Pattern, PatternKind, PatternUniverse, contains, exact_fpm
from .privacy import NoiseParams, PolyaParams
from .runtime import ExperimentConfig, ExperimentResult, compare_strategies, f1_score, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AnalystConfig",
    "ExperimentConfig",
    "ExperimentResult",
    "FilterDecision",
    "LocalData",
    "NoiseParams",
    "Pattern",
    "PatternKind",
    "PatternUniverse",
    "PolyaParams",
    "Strategy",
    "SyntheticSpec",
    "compare_strategies",
    "contains",
    "exact_fpm",
    "f1_score",
    "generate_synthetic",
    "load_dataset",
    "run_experiment",
    "write_dataset",
]
