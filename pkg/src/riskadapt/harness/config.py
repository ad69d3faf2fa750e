"""Experiment configuration: YAML files plus command-line overrides.

A config file is a nested mapping with these sections: ``environment``
(kind: gridworld | corridor, plus constructor parameters), ``agent``
(AgentConfig fields), ``risk`` (policy kind, alpha, mapping, alpha_min),
optional ``rnd`` (novelty-estimator parameters), optional ``shift``
(mid-training dynamics change, corridor only), optional ``study``
(tabular gridworld sweep parameters), and run-level keys: seeds,
total_steps, eval_interval, eval_episodes, eval_max_steps, output_dir.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from ..agents.qr import AgentConfig, EpsilonSchedule
from ..distributions import ADAPTIVE, RiskMapping, RiskPolicy, STATIC_CVAR
from ..envs import CorridorConfig, GridConfig, WindConfig


def load_config(path) -> dict:
    """Read a YAML config file into a plain dict."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return data


def build_risk_policy(risk: dict | None) -> RiskPolicy:
    risk = dict(risk or {})
    kind = risk.get("policy", "neutral")
    alpha = float(risk.get("alpha", 1.0))
    if kind == ADAPTIVE:
        mapping = RiskMapping(risk.get("mapping", "exponential"),
                              float(risk.get("alpha_min", 0.01)))
        return RiskPolicy(kind, alpha, mapping)
    if kind == STATIC_CVAR:
        return RiskPolicy(kind, alpha)
    return RiskPolicy(kind)


def build_env_config(environment: dict):
    """Build a GridConfig or CorridorConfig from the environment section."""
    env = dict(environment)
    kind = env.pop("kind", None)
    if kind == "gridworld":
        wind = env.pop("wind", None)
        if wind is not None:
            env["wind"] = WindConfig(wind.get("direction", "south"),
                                     float(wind.get("strength", 0.25)))
        for key in ("start_cell", "goal_cell"):
            if key in env:
                env[key] = tuple(env[key])
        return GridConfig(**env)
    if kind == "corridor":
        return CorridorConfig(**env)
    raise ValueError(f"environment.kind must be gridworld or corridor, got {kind!r}")


def build_agent_config(agent: dict | None, risk_policy: RiskPolicy) -> AgentConfig:
    agent = dict(agent or {})
    if "epsilon" in agent:
        eps = agent.pop("epsilon")
        agent["epsilon"] = EpsilonSchedule(float(eps.get("start", 1.0)),
                                           float(eps.get("end", 0.05)),
                                           float(eps.get("fraction", 0.1)))
    if "hidden_sizes" in agent:
        agent["hidden_sizes"] = tuple(agent["hidden_sizes"])
    return AgentConfig(risk_policy=risk_policy, **agent)


@dataclass
class ExperimentConfig:
    """Fully resolved training-experiment description."""

    name: str
    env_kind: str
    env_config: object
    env_dict: dict
    agent_config: AgentConfig
    seeds: list[int]
    total_steps: int
    eval_interval: int = 10_000
    eval_episodes: int = 50
    eval_max_steps: int | None = 500
    output_dir: str = "results"
    rnd: dict = field(default_factory=dict)
    shift: dict | None = None

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.total_steps < 0:
            raise ValueError("total_steps must be >= 0")
        if self.total_steps and self.eval_interval > self.total_steps:
            raise ValueError("eval_interval must be <= total_steps")
        if self.shift is not None and self.env_kind != "corridor":
            raise ValueError("dynamics shifts are only defined for the corridor")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        risk_policy = build_risk_policy(data.get("risk"))
        env_dict = dict(data.get("environment") or {})
        env_config = build_env_config(env_dict)
        agent_config = build_agent_config(data.get("agent"), risk_policy)
        return cls(
            name=str(data.get("name", "experiment")),
            env_kind=env_dict.get("kind"),
            env_config=env_config,
            env_dict=env_dict,
            agent_config=agent_config,
            seeds=[int(s) for s in data.get("seeds", [0])],
            total_steps=int(data.get("total_steps", 0)),
            eval_interval=int(data.get("eval_interval", 10_000)),
            eval_episodes=int(data.get("eval_episodes", 50)),
            eval_max_steps=(None if data.get("eval_max_steps") is None
                            else int(data.get("eval_max_steps"))),
            output_dir=str(data.get("output_dir", "results")),
            rnd=dict(data.get("rnd") or {}),
            shift=(None if data.get("shift") is None else dict(data["shift"])),
        )


def apply_overrides(data: dict, seed=None, steps=None, risk_policy=None,
                    alpha=None, mapping=None, output_dir=None) -> dict:
    """Apply CLI override flags onto a loaded config dict (returns a copy)."""
    data = {**data, "risk": dict(data.get("risk") or {})}
    if seed is not None:
        data["seeds"] = [int(seed)]
    if steps is not None:
        data["total_steps"] = int(steps)
    if risk_policy is not None:
        data["risk"]["policy"] = risk_policy
    if alpha is not None:
        data["risk"]["alpha"] = float(alpha)
    if mapping is not None:
        data["risk"]["mapping"] = mapping
    if output_dir is not None:
        data["output_dir"] = output_dir
    return data
