"""Deterministic-seeded simulators used by the agents and the harness."""

from .base import StepResult
from .gridworld import (
    EAST,
    FORWARD,
    GridConfig,
    GridState,
    GridWorldEnv,
    NORTH,
    SOUTH,
    TURN_LEFT,
    TURN_RIGHT,
    WEST,
    WindConfig,
    grid_step,
    transition_outcomes,
)
from .corridor import COAST, CorridorConfig, DynamicCorridorEnv, PUSH_LEFT, PUSH_RIGHT, corridor_step

__all__ = [
    "StepResult", "GridConfig", "GridState", "GridWorldEnv", "WindConfig",
    "grid_step", "transition_outcomes",
    "NORTH", "EAST", "SOUTH", "WEST", "TURN_LEFT", "TURN_RIGHT", "FORWARD",
    "CorridorConfig", "DynamicCorridorEnv", "corridor_step",
    "PUSH_LEFT", "COAST", "PUSH_RIGHT",
]
