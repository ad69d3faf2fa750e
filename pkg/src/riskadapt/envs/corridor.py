"""Point-mass corridor with hidden per-episode dynamics.

A 1-d corridor with cliffs beyond both ends.  Each episode draws hidden
mass and friction multipliers uniformly from [1 - v, 1 + v]; the agent
observes only (position, velocity) and must learn to manage momentum it
cannot fully predict.  Stopping inside the goal zone at the far end pays a
bonus; sliding past either end is a failure.  The risk structure: pushing
hard reaches the far end sooner, but with an unlucky (light, slippery)
draw the same habit overshoots the edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import StepResult

PUSH_LEFT, COAST, PUSH_RIGHT = 0, 1, 2
N_ACTIONS = 3
_PUSH_SIGN = (-1.0, 0.0, 1.0)


@dataclass(frozen=True)
class CorridorConfig:
    """Corridor dynamics parameters.

    The floor spans [0, length] with a cliff beyond each end; the goal zone
    is the final ``goal_zone`` units before the far edge, so arriving there
    too fast carries the agent past the edge instead.  Per-episode mass and
    friction multipliers are drawn from [1 - variation_fraction,
    1 + variation_fraction] and are hidden from the agent.
    """

    length: float = 10.0
    friction_base: float = 0.5
    mass_base: float = 1.0
    variation_fraction: float = 0.2
    push_force: float = 1.0
    dt: float = 0.1
    action_cost: float = 0.01
    goal_zone: float = 0.2
    start_position: float = 1.0
    start_velocity: float = 0.0
    max_episode_steps: int = 500
    failure_reward: float = -1.0
    goal_bonus: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.variation_fraction < 1.0:
            raise ValueError("variation_fraction must lie in [0, 1)")
        if self.length <= 0 or self.friction_base <= 0 or self.mass_base <= 0:
            raise ValueError("length, friction_base, and mass_base must be positive")
        if self.dt <= 0 or self.push_force <= 0:
            raise ValueError("dt and push_force must be positive")
        if not 0.0 < self.goal_zone < self.length - self.start_position:
            raise ValueError("goal_zone must be positive and leave room to start outside it")
        if self.max_episode_steps < 1:
            raise ValueError("max_episode_steps must be >= 1")


def corridor_step(state: tuple[float, float], action: int, config: CorridorConfig,
                  multipliers: tuple[float, float]) -> StepResult:
    """One semi-implicit Euler step of the point mass.

    state = (x, v); multipliers = (mass multiplier, friction multiplier).
    Reward is the forward displacement minus the action cost, overridden by
    the failure reward when sliding off either end and topped by the goal
    bonus when stopping in the goal zone.  Dynamics are deterministic given
    the multipliers; all randomness lives in the per-episode draw.
    """
    x, v = state
    if not (math.isfinite(x) and math.isfinite(v)):
        raise ValueError("corridor state must be finite")
    m_mult, f_mult = multipliers
    push = _PUSH_SIGN[int(action)]
    accel = (push * config.push_force) / (config.mass_base * m_mult) \
        - config.friction_base * f_mult * v
    v_next = v + accel * config.dt
    x_next = x + v_next * config.dt
    obs = np.array([x_next, v_next])
    if x_next < 0.0 or x_next > config.length:
        return StepResult(obs, config.failure_reward, True, True)
    reward = (x_next - x) - config.action_cost * abs(push)
    if x_next >= config.length - config.goal_zone:
        return StepResult(obs, reward + config.goal_bonus, True, False)
    return StepResult(obs, reward, False, False)


class DynamicCorridorEnv:
    """Sampling wrapper drawing hidden multipliers each episode.

    ``set_variation_fraction`` changes the multiplier range for subsequent
    episodes (used to inject dynamics shifts mid-training); the current
    episode keeps its draw.  Episodes longer than max_episode_steps are
    truncated: ``truncated`` becomes True while the StepResult stays
    non-terminal, so value bootstrapping remains correct.
    """

    def __init__(self, config: CorridorConfig, rng=None):
        self.config = config
        self.variation_fraction = config.variation_fraction
        self._rng = rng if rng is not None else np.random.default_rng(0)
        self.multipliers = (1.0, 1.0)
        self.state = (config.start_position, config.start_velocity)
        self.steps = 0
        self.terminal = True
        self.truncated = False

    @property
    def n_actions(self) -> int:
        return N_ACTIONS

    @property
    def obs_dim(self) -> int:
        return 2

    def set_variation_fraction(self, fraction: float) -> None:
        if not 0.0 <= fraction < 1.0:
            raise ValueError("variation_fraction must lie in [0, 1)")
        self.variation_fraction = float(fraction)

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        v = self.variation_fraction
        self.multipliers = (float(self._rng.uniform(1.0 - v, 1.0 + v)),
                            float(self._rng.uniform(1.0 - v, 1.0 + v)))
        self.state = (self.config.start_position, self.config.start_velocity)
        self.steps = 0
        self.terminal = False
        self.truncated = False
        return np.array(self.state)

    def step(self, action: int) -> StepResult:
        if self.terminal:
            raise RuntimeError("step on a terminal environment; call reset")
        if self.truncated:
            raise RuntimeError("step on a truncated episode; call reset")
        result = corridor_step(self.state, action, self.config, self.multipliers)
        self.state = (float(result.next_observation[0]), float(result.next_observation[1]))
        self.steps += 1
        self.terminal = result.terminal
        if not result.terminal and self.steps >= self.config.max_episode_steps:
            self.truncated = True
        return result
