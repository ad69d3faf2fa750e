"""Per-seed training runs with metric CSVs, checkpoints, and aggregation.

Each seed trains independently (its own environment stream, network init,
exploration stream, and evaluation seeds, all derived from the one root
seed) and writes one metrics CSV; an aggregate CSV holds the across-seed
mean and standard error per evaluation step.  Float columns are written
with repr so reruns are byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..agents.qr import QrAgent, train
from ..distributions import ADAPTIVE
from ..envs import DynamicCorridorEnv, GridWorldEnv
from ..networks import save_arrays
from ..rnd import RndEstimator
from ..seeding import derive_seed, substream
from .config import ExperimentConfig
from .evaluation import rollout_stats

CSV_HEADER = "step,seed,mean_return,failure_rate,mean_risk_alpha,q_estimation_error"
_METRIC_FIELDS = ("mean_return", "failure_rate", "mean_risk_alpha", "q_estimation_error")
AGGREGATE_HEADER = "step," + ",".join(f"{f},{f}_stderr" for f in _METRIC_FIELDS)

_RND_KEYS = ("lr", "ema_decay", "warmup_updates", "hidden", "feature_dim")


@dataclass(frozen=True)
class MetricsRecord:
    """One evaluation point of one seed's training run."""

    step: int
    seed: int
    mean_return: float
    failure_rate: float
    mean_risk_alpha: float
    q_estimation_error: float

    def __post_init__(self):
        # numpy scalars repr as np.float64(...), which read_csv_columns
        # cannot parse back; normalize so csv_line stays plain floats
        object.__setattr__(self, "step", int(self.step))
        object.__setattr__(self, "seed", int(self.seed))
        for field in _METRIC_FIELDS:
            object.__setattr__(self, field, float(getattr(self, field)))
        if not 0.0 <= self.failure_rate <= 1.0:
            raise ValueError(f"failure_rate {self.failure_rate} outside [0, 1]")

    def csv_line(self) -> str:
        return (f"{self.step},{self.seed},{self.mean_return!r},{self.failure_rate!r},"
                f"{self.mean_risk_alpha!r},{self.q_estimation_error!r}")


def build_env(config: ExperimentConfig, rng=None):
    """Instantiate the training or evaluation environment."""
    if config.env_kind == "gridworld":
        return GridWorldEnv(config.env_config, encode="onehot", rng=rng)
    return DynamicCorridorEnv(config.env_config, rng=rng)


def build_rnd(config: ExperimentConfig, obs_dim: int, seed: int) -> RndEstimator | None:
    """Novelty estimator for adaptive-risk runs; None otherwise."""
    policy = config.agent_config.risk_policy
    if policy.kind != ADAPTIVE:
        return None
    unknown = set(config.rnd) - set(_RND_KEYS)
    if unknown:
        raise ValueError(f"unknown rnd config keys: {sorted(unknown)}")
    kwargs = {key: config.rnd[key] for key in _RND_KEYS if key in config.rnd}
    return RndEstimator(obs_dim, mapping=policy.mapping,
                        rng=substream(seed, "rnd_init"), **kwargs)


@dataclass
class SeedRun:
    """Everything one seed's training run produced."""

    seed: int
    records: list
    agent: QrAgent
    rnd: RndEstimator | None
    alpha_trace: np.ndarray
    episodes: int

    @property
    def final_record(self) -> MetricsRecord:
        return self.records[-1]


def run_seed(config: ExperimentConfig, seed: int) -> SeedRun:
    """Train one seed and evaluate it every eval_interval steps."""
    env = build_env(config, substream(seed, "env"))
    eval_env = build_env(config)
    agent = QrAgent(env.obs_dim, env.n_actions, config.agent_config, seed=seed)
    rnd = build_rnd(config, env.obs_dim, seed)

    def evaluator(agent, rnd_estimator, step):
        if config.env_kind == "corridor":
            # Evaluation follows any mid-training dynamics shift.
            eval_env.set_variation_fraction(env.variation_fraction)
        stats = rollout_stats(agent, eval_env, config.eval_episodes,
                              derive_seed(seed, "eval", step),
                              agent.config.discount, rnd=rnd_estimator,
                              max_steps=config.eval_max_steps)
        return MetricsRecord(step, seed, stats.mean_return, stats.failure_rate,
                             stats.mean_risk_alpha, stats.q_estimation_error)

    callbacks = []
    if config.shift is not None:
        at_step = int(config.shift["at_step"])
        fraction = float(config.shift["variation_fraction"])
        callbacks.append((at_step, lambda: env.set_variation_fraction(fraction)))

    result = train(agent, env, config.total_steps, rnd_estimator=rnd,
                   eval_interval=config.eval_interval, evaluator=evaluator,
                   step_callbacks=callbacks)
    return SeedRun(seed, result.metrics, agent, rnd, result.alpha_trace,
                   result.episodes)


def write_metrics_csv(path, records) -> None:
    lines = [CSV_HEADER] + [record.csv_line() for record in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def aggregate_rows(per_seed_records: list) -> list:
    """Across-seed mean and standard error per step.

    Every seed evaluates on the same step grid, so rows align by index.
    Standard error uses the n-1 normalization and is 0.0 for a single seed.
    """
    if not per_seed_records:
        return []
    n_rows = len(per_seed_records[0])
    for records in per_seed_records:
        if len(records) != n_rows:
            raise ValueError("seeds produced differing numbers of evaluation rows")
    rows = []
    n = len(per_seed_records)
    for i in range(n_rows):
        step = per_seed_records[0][i].step
        row = [step]
        for field_name in _METRIC_FIELDS:
            values = np.array([getattr(records[i], field_name)
                               for records in per_seed_records])
            mean = float(values.mean())
            stderr = (float(values.std(ddof=1)) / math.sqrt(n)) if n > 1 else 0.0
            row.extend((mean, stderr))
        rows.append(row)
    return rows


def write_aggregate_csv(path, per_seed_records) -> None:
    lines = [AGGREGATE_HEADER]
    for row in aggregate_rows(per_seed_records):
        lines.append(",".join([str(row[0])] + [repr(v) for v in row[1:]]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class ExperimentOutput:
    """File layout and in-memory results of one run_experiment call."""

    config: ExperimentConfig
    output_dir: Path
    runs: list
    failed_seeds: list

    def run_for(self, seed: int) -> SeedRun:
        for run in self.runs:
            if run.seed == seed:
                return run
        raise KeyError(f"seed {seed} has no successful run")


def run_experiment(config: ExperimentConfig) -> ExperimentOutput:
    """Train every configured seed and write metrics plus checkpoints.

    Per seed: metrics_seed{N}.csv, agent_seed{N}.bin, alpha_trace_seed{N}.bin,
    and (adaptive runs) rnd_seed{N}.bin.  Across seeds: metrics.csv with
    mean and standard-error columns.  A seed whose run raises is recorded in
    errors.log and the remaining seeds proceed; the call fails only if every
    seed fails.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    failed = []
    for seed in config.seeds:
        try:
            run = run_seed(config, seed)
        except Exception as exc:  # noqa: BLE001 - seed isolation is the contract
            failed.append((seed, f"{type(exc).__name__}: {exc}"))
            continue
        write_metrics_csv(out / f"metrics_seed{seed}.csv", run.records)
        extra = {"env": config.env_dict, "experiment": config.name,
                 "total_steps": config.total_steps}
        if run.rnd is not None:
            extra["rnd_checkpoint"] = f"rnd_seed{seed}.bin"
            run.rnd.save(out / f"rnd_seed{seed}.bin")
        run.agent.save(out / f"agent_seed{seed}.bin", extra_meta=extra)
        save_arrays(out / f"alpha_trace_seed{seed}.bin",
                    {"alpha_trace": run.alpha_trace},
                    {"seed": seed, "total_steps": config.total_steps})
        runs.append(run)
    if failed:
        lines = [f"seed {seed}: {message}" for seed, message in failed]
        (out / "errors.log").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if not runs:
        raise RuntimeError("every seed failed: " + "; ".join(
            f"seed {seed}: {message}" for seed, message in failed))
    write_aggregate_csv(out / "metrics.csv", [run.records for run in runs])
    return ExperimentOutput(config, out, runs, failed)
