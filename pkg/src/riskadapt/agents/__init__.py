"""Tabular distributional evaluation and the neural quantile-regression agent."""

from .tabular import (
    GridMdp,
    TabularMdp,
    TabularQuantileTable,
    bellman_residual,
    distributional_policy_evaluation,
    extract_grid_mdp,
    greedy_policy,
    value_iteration,
)
from .replay import Batch, ReplayBuffer
from .qr import AgentConfig, EpsilonSchedule, QrAgent, TrainResult, train

__all__ = [
    "TabularMdp", "GridMdp", "TabularQuantileTable",
    "value_iteration", "greedy_policy", "bellman_residual",
    "distributional_policy_evaluation", "extract_grid_mdp",
    "ReplayBuffer", "Batch",
    "AgentConfig", "EpsilonSchedule", "QrAgent", "TrainResult", "train",
]
