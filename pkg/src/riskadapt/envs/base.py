"""Shared environment step container."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class StepResult:
    """Outcome of one environment step.

    failure implies terminal and marks the bad endings only: lava entry in
    the gridworld, falling off a cliff in the corridor.  Reaching a goal is
    terminal but not a failure.
    """

    next_observation: Any
    reward: float
    terminal: bool
    failure: bool

    def __post_init__(self):
        if self.failure and not self.terminal:
            raise ValueError("failure step must be terminal")
