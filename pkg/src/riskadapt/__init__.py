"""Risk-adaptive distributional reinforcement learning.

Quantile-critic agents whose risk appetite is a first-class control: a CVaR
distortion of the critic's return distribution drives both action selection
and the bootstrap target, and the distortion level can be fixed, neutral,
or adapted online from a state-novelty signal (random network
distillation).  Ships two small simulators (a windy lava-gap gridworld and
a corridor with hidden per-episode dynamics), exact tabular solvers, and an
experiment harness with a CLI.

Hot numeric kernels run through a compiled extension when available; set
RISKADAPT_KERNELS=python|cython to force a backend (see riskadapt._kernels).
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .distributions import (
    ADAPTIVE,
    EXPONENTIAL,
    LINEAR,
    LOGARITHMIC,
    NEUTRAL,
    QuantileDistribution,
    RiskMapping,
    RiskPolicy,
    STATIC_CVAR,
    cvar_distort,
    distorted_expectation,
    distorted_expectations,
    expectation,
    inverse_cdf,
    midpoint_fractions,
)
from .envs import (
    CorridorConfig,
    DynamicCorridorEnv,
    GridConfig,
    GridState,
    GridWorldEnv,
    StepResult,
    WindConfig,
    corridor_step,
    grid_step,
)
from .networks import Adam, Mlp, load_arrays, polyak_update, save_arrays
from .rnd import RndEstimator
from .seeding import derive_seed, substream

__version__ = "0.1.0"

__all__ = [
    "ADAPTIVE", "EXPONENTIAL", "LINEAR", "LOGARITHMIC", "NEUTRAL", "STATIC_CVAR",
    "QuantileDistribution", "RiskMapping", "RiskPolicy",
    "cvar_distort", "distorted_expectation", "distorted_expectations",
    "expectation", "inverse_cdf", "midpoint_fractions",
    "CorridorConfig", "DynamicCorridorEnv", "GridConfig", "GridState",
    "GridWorldEnv", "StepResult", "WindConfig", "corridor_step", "grid_step",
    "Adam", "Mlp", "load_arrays", "polyak_update", "save_arrays",
    "RndEstimator", "derive_seed", "substream",
    "KERNEL_BACKEND", "__version__",
]
