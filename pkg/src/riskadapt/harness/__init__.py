"""Experiment orchestration: configs, evaluation, sweeps, metrics, CLI."""

from .config import ExperimentConfig, load_config
from .evaluation import EvalResult, evaluate, q_estimation_error, rollout_stats
from .sweep import (
    SweepResult,
    alpha_sweep,
    run_default_study,
    run_grid_study,
    study_grid_config,
)
from .experiments import MetricsRecord, run_experiment

__all__ = [
    "ExperimentConfig", "load_config",
    "EvalResult", "evaluate", "q_estimation_error", "rollout_stats",
    "SweepResult", "alpha_sweep", "run_grid_study", "run_default_study",
    "study_grid_config",
    "MetricsRecord", "run_experiment",
]
