"""Windy lava-gap gridworld.

A rectangular grid bounded by walls, split by one vertical lava column with
a single gap cell.  The agent turns left/right or moves forward; wind may
rotate its heading one 90-degree step toward the wind direction before the
chosen action resolves, so a committed Forward can end up pointing somewhere
else.  An agent facing exactly away from the wind is equidistant both ways
around, so a firing wind rotates it to either side with equal probability.
Stepping into lava is the only failure; reaching the goal pays +1; there is
no step limit in the dynamics themselves.

Coordinates are (x, y) with x the column growing east and y the row growing
south; headings are indexed clockwise north=0, east=1, south=2, west=3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import StepResult

NORTH, EAST, SOUTH, WEST = 0, 1, 2, 3
HEADING_NAMES = ("north", "east", "south", "west")
DX = (0, 1, 0, -1)
DY = (-1, 0, 1, 0)

TURN_LEFT, TURN_RIGHT, FORWARD = 0, 1, 2
N_ACTIONS = 3

FREE, WALL, LAVA, GOAL = 0, 1, 2, 3


def heading_index(direction) -> int:
    """Accept a heading as an index or a compass name."""
    if isinstance(direction, str):
        try:
            return HEADING_NAMES.index(direction.lower())
        except ValueError:
            raise ValueError(f"unknown direction {direction!r}") from None
    direction = int(direction)
    if direction not in (NORTH, EAST, SOUTH, WEST):
        raise ValueError(f"heading index must be 0..3, got {direction}")
    return direction


@dataclass(frozen=True)
class WindConfig:
    """Wind blowing from a fixed compass direction with strength p.

    Each step, with probability p, the agent's heading rotates one
    90-degree step toward the wind direction before its action resolves.
    Already facing the wind is a no-op; facing exactly away is equidistant
    both ways, so the rotation goes to either side with equal probability.
    """

    direction: int = SOUTH
    strength: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "direction", heading_index(self.direction))
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError("wind strength must lie in [0, 1]")


@dataclass(frozen=True)
class GridState:
    """Agent position and heading; positions are non-wall interior cells."""

    x: int
    y: int
    heading: int


@dataclass(frozen=True)
class GridConfig:
    """Layout of the windy lava-gap grid.

    The border ring is wall; column ``lava_column`` is lava on every
    interior row except ``gap_row``.  start_cell and goal_cell must sit on
    opposite sides of the lava column.
    """

    width: int = 7
    height: int = 7
    lava_column: int = 3
    gap_row: int = 3
    start_cell: tuple[int, int] = (1, 1)
    goal_cell: tuple[int, int] = (5, 5)
    start_heading: int = EAST
    wind: WindConfig = field(default_factory=WindConfig)

    def __post_init__(self):
        if self.width < 5 or self.height < 4:
            raise ValueError("grid too small for a lava column with a gap")
        if not 1 <= self.lava_column <= self.width - 2:
            raise ValueError("lava column must be an interior column")
        if not 1 <= self.gap_row <= self.height - 2:
            raise ValueError("gap row must be an interior row")
        object.__setattr__(self, "start_cell", tuple(self.start_cell))
        object.__setattr__(self, "goal_cell", tuple(self.goal_cell))
        object.__setattr__(self, "start_heading", heading_index(self.start_heading))
        for name, cell in (("start_cell", self.start_cell), ("goal_cell", self.goal_cell)):
            if self.cell_type(*cell) not in (FREE, GOAL):
                raise ValueError(f"{name} {cell} must be a free interior cell")
        if self.start_cell == self.goal_cell:
            raise ValueError("start and goal must differ")
        sides = sorted((self.start_cell[0], self.goal_cell[0]))
        if not sides[0] < self.lava_column < sides[1]:
            raise ValueError("start and goal must lie on opposite sides of the lava column")

    def cell_type(self, x: int, y: int) -> int:
        if x <= 0 or y <= 0 or x >= self.width - 1 or y >= self.height - 1:
            return WALL
        if (x, y) == self.goal_cell:
            return GOAL
        if x == self.lava_column and y != self.gap_row:
            return LAVA
        return FREE

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def start_state(self) -> GridState:
        return GridState(self.start_cell[0], self.start_cell[1], self.start_heading)


def wind_rotations(heading: int, wind_direction: int):
    """Post-rotation headings given the wind fires, as (probability, heading).

    One 90-degree rotation toward ``wind_direction``: a no-op when already
    facing the wind, deterministic when one side is closer, and an even
    split between clockwise and counterclockwise for the opposite heading.
    """
    diff = (wind_direction - heading) % 4
    if diff == 0:
        return ((1.0, heading),)
    if diff == 1:
        return ((1.0, (heading + 1) % 4),)
    if diff == 3:
        return ((1.0, (heading - 1) % 4),)
    return ((0.5, (heading + 1) % 4), (0.5, (heading - 1) % 4))


def _resolve(state: GridState, heading: int, action: int, config: GridConfig):
    """Deterministic action outcome given the post-wind heading.

    Returns (next_state_or_None, reward, terminal, failure).
    """
    if action == TURN_LEFT:
        return GridState(state.x, state.y, (heading - 1) % 4), 0.0, False, False
    if action == TURN_RIGHT:
        return GridState(state.x, state.y, (heading + 1) % 4), 0.0, False, False
    if action != FORWARD:
        raise ValueError(f"unknown action {action}")
    nx, ny = state.x + DX[heading], state.y + DY[heading]
    target = config.cell_type(nx, ny)
    if target == WALL:
        return GridState(state.x, state.y, heading), 0.0, False, False
    if target == LAVA:
        return None, 0.0, True, True
    if target == GOAL:
        return None, 1.0, True, False
    return GridState(nx, ny, heading), 0.0, False, False


def transition_outcomes(state: GridState, action: int, config: GridConfig):
    """Exact outcome distribution of one step.

    Returns a list of (probability, next_state_or_None, reward, terminal,
    failure) tuples with probabilities summing to 1; identical outcomes are
    merged.  This is the single source of dynamics: the sampling simulator
    and the tabular MDP extraction both consume it.
    """
    p = config.wind.strength
    branches = []
    if p < 1.0:
        branches.append((1.0 - p, state.heading))
    if p > 0.0:
        for weight, rotated in wind_rotations(state.heading, config.wind.direction):
            branches.append((p * weight, rotated))
    merged: dict = {}
    for prob, heading in branches:
        outcome = _resolve(state, heading, action, config)
        key = outcome[0], outcome[1], outcome[2], outcome[3]
        merged[key] = merged.get(key, 0.0) + prob
    return [(prob, *key) for key, prob in merged.items()]


def grid_step(state: GridState, action: int, config: GridConfig, rng) -> StepResult:
    """Sample one step; next_observation is a GridState or None on terminal."""
    outcomes = transition_outcomes(state, action, config)
    if len(outcomes) == 1:
        chosen = outcomes[0]
    else:
        u = rng.random()
        acc = 0.0
        chosen = outcomes[-1]
        for outcome in outcomes:
            acc += outcome[0]
            if u < acc:
                chosen = outcome
                break
    _, next_state, reward, terminal, failure = chosen
    return StepResult(next_state, reward, terminal, failure)


class GridWorldEnv:
    """Sampling wrapper around the grid dynamics.

    encode="state" yields GridState observations (tabular use);
    encode="onehot" yields a float vector: cell one-hot followed by heading
    one-hot.
    """

    def __init__(self, config: GridConfig, encode: str = "state", rng=None):
        if encode not in ("state", "onehot"):
            raise ValueError(f"unknown encoding {encode!r}")
        self.config = config
        self.encode = encode
        self._rng = rng if rng is not None else np.random.default_rng(0)
        self.state: GridState | None = None
        self.terminal = True

    @property
    def n_actions(self) -> int:
        return N_ACTIONS

    @property
    def obs_dim(self) -> int:
        return self.config.n_cells + 4

    def observation(self, state: GridState):
        if self.encode == "state":
            return state
        vec = np.zeros(self.obs_dim)
        vec[state.y * self.config.width + state.x] = 1.0
        vec[self.config.n_cells + state.heading] = 1.0
        return vec

    def reset(self, seed: int | None = None):
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self.state = self.config.start_state()
        self.terminal = False
        return self.observation(self.state)

    def step(self, action: int) -> StepResult:
        if self.terminal or self.state is None:
            raise RuntimeError("step on a terminal environment; call reset")
        result = grid_step(self.state, int(action), self.config, self._rng)
        self.state = result.next_observation
        self.terminal = result.terminal
        if self.encode == "onehot":
            obs = (np.zeros(self.obs_dim) if result.next_observation is None
                   else self.observation(result.next_observation))
            return StepResult(obs, result.reward, result.terminal, result.failure)
        return result

    @property
    def truncated(self) -> bool:
        return False
