"""Command-line front end.

Subcommands: ``train`` runs a multi-seed training experiment from a YAML
config, ``eval`` rolls out a saved checkpoint (optionally under overridden
environment parameters), ``sweep`` runs the tabular gridworld risk sweep,
and ``report`` renders plots and tables from a results directory.
"""

from __future__ import annotations

import argparse
import copy
import sys
from pathlib import Path

import yaml

from ..distributions import ADAPTIVE, MAPPING_KINDS, RISK_KINDS
from ..envs import DynamicCorridorEnv, GridWorldEnv, WindConfig
from ..networks import load_arrays
from ..rnd import RndEstimator
from .config import ExperimentConfig, apply_overrides, build_env_config, load_config
from .evaluation import evaluate
from .experiments import run_experiment
from .report import report, sweep_summary_csv_lines
from .sweep import DEFAULT_ALPHAS, DEFAULT_SETTINGS, run_grid_study


def _parse_env_override(item: str):
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ValueError(f"environment override {item!r} must look like key=value")
    return key.split("."), yaml.safe_load(raw)


def _apply_env_overrides(env_dict: dict, overrides) -> dict:
    data = copy.deepcopy(env_dict)
    for parts, value in overrides:
        node = data
        for part in parts[:-1]:
            nxt = node.get(part)
            if not isinstance(nxt, dict):
                nxt = {}
                node[part] = nxt
            node = nxt
        node[parts[-1]] = value
    return data


def cmd_train(args) -> int:
    data = load_config(args.config)
    data = apply_overrides(data, seed=args.seed, steps=args.steps,
                           risk_policy=args.risk_policy, alpha=args.alpha,
                           mapping=args.mapping, output_dir=args.output_dir)
    config = ExperimentConfig.from_dict(data)
    output = run_experiment(config)
    for run in output.runs:
        if run.records:
            final = run.final_record
            print(f"seed {run.seed}: return {final.mean_return:.4f}  "
                  f"failures {final.failure_rate:.3f}  alpha {final.mean_risk_alpha:.3f}")
        else:
            print(f"seed {run.seed}: no evaluation rows (total_steps "
                  f"{config.total_steps}, eval_interval {config.eval_interval})")
    for seed, message in output.failed_seeds:
        print(f"seed {seed} failed: {message}", file=sys.stderr)
    print(f"wrote {output.output_dir / 'metrics.csv'}")
    return 1 if output.failed_seeds else 0


def cmd_eval(args) -> int:
    from ..agents.qr import QrAgent

    _, meta = load_arrays(args.checkpoint)
    env_dict = meta.get("env")
    if not env_dict:
        raise ValueError(f"{args.checkpoint}: checkpoint carries no environment "
                         "description; cannot rebuild the environment")
    env_dict = _apply_env_overrides(env_dict, [_parse_env_override(item)
                                               for item in args.overrides])
    kind = env_dict.get("kind")
    env_config = build_env_config(env_dict)
    if kind == "gridworld":
        env = GridWorldEnv(env_config, encode="onehot")
    else:
        env = DynamicCorridorEnv(env_config)

    agent = QrAgent.load(args.checkpoint)
    rnd = None
    if agent.config.risk_policy.kind == ADAPTIVE:
        rnd_path = args.rnd
        if rnd_path is None and meta.get("rnd_checkpoint"):
            rnd_path = Path(args.checkpoint).parent / meta["rnd_checkpoint"]
        if rnd_path is None:
            raise ValueError("adaptive-risk checkpoint needs its novelty estimator; "
                             "pass --rnd <file>")
        rnd = RndEstimator.load(rnd_path)

    max_steps = None if args.max_steps == 0 else args.max_steps
    result = evaluate(agent, env, args.episodes, args.seed, rnd=rnd,
                      max_steps=max_steps)
    print(f"episodes={args.episodes}")
    print(f"mean_return={result.mean_return!r}")
    print(f"failure_rate={result.failure_rate!r}")
    print(f"mean_risk_alpha={result.mean_risk_alpha!r}")
    return 0


def _parse_settings(raw) -> tuple:
    settings = []
    for entry in raw:
        settings.append((str(entry["name"]),
                         WindConfig(entry.get("direction", "south"),
                                    float(entry.get("strength", 0.25)))))
    return tuple(settings)


def cmd_sweep(args) -> int:
    data = load_config(args.config)
    env_dict = dict(data.get("environment") or {})
    if env_dict.get("kind") != "gridworld":
        raise ValueError("sweep needs a gridworld environment section")
    grid_config = build_env_config(env_dict)
    study = dict(data.get("study") or {})
    settings = (_parse_settings(study["settings"]) if "settings" in study
                else DEFAULT_SETTINGS)
    alphas = tuple(float(a) for a in study.get("alphas", DEFAULT_ALPHAS))
    seed = args.seed if args.seed is not None else int(study.get("seed", 0))
    episodes = (args.episodes if args.episodes is not None
                else int(study.get("n_episodes", 100)))
    _, _, _, sweep = run_grid_study(
        grid_config,
        discount=float(study.get("discount", 0.95)),
        n_quantiles=int(study.get("n_quantiles", 50)),
        settings=settings, alphas=alphas, n_episodes=episodes, seed=seed,
        max_steps=int(study.get("max_steps", 1000)))
    out = Path(args.output_dir or data.get("output_dir", "results"))
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_detail.csv").write_text(
        "\n".join(sweep.detail_csv_lines()) + "\n", encoding="utf-8")
    (out / "sweep_summary.txt").write_text(sweep.to_text() + "\n", encoding="utf-8")
    (out / "sweep_summary.csv").write_text(
        "\n".join(sweep_summary_csv_lines(sweep)) + "\n", encoding="utf-8")
    print(sweep.to_text())
    print(f"wrote {out / 'sweep_detail.csv'}")
    return 0


def cmd_report(args) -> int:
    output = report(args.dir, args.output_dir)
    for path in output.written:
        print(f"wrote {path}")
    for note in output.notes:
        print(note, file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskadapt",
        description="risk-adaptive distributional RL experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run a multi-seed training experiment")
    train.add_argument("config", help="YAML experiment config")
    train.add_argument("--seed", type=int, help="train this single seed only")
    train.add_argument("--steps", type=int, help="override total_steps")
    train.add_argument("--risk-policy", choices=RISK_KINDS)
    train.add_argument("--alpha", type=float, help="static risk level")
    train.add_argument("--mapping", choices=MAPPING_KINDS,
                       help="novelty-to-alpha mapping (adaptive policy)")
    train.add_argument("--output-dir")
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a saved checkpoint")
    ev.add_argument("checkpoint", help="agent checkpoint file")
    ev.add_argument("overrides", nargs="*",
                    help="environment overrides, e.g. wind.strength=0.9")
    ev.add_argument("--episodes", type=int, default=100)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--max-steps", type=int, default=500,
                    help="episode step cap (0 disables)")
    ev.add_argument("--rnd", help="novelty-estimator checkpoint (adaptive policy)")
    ev.set_defaults(func=cmd_eval)

    sweep = sub.add_parser("sweep", help="tabular gridworld risk sweep")
    sweep.add_argument("config", help="YAML config with gridworld + study sections")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--episodes", type=int)
    sweep.add_argument("--output-dir")
    sweep.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="render plots and tables from results")
    rep.add_argument("dir", help="results directory")
    rep.add_argument("--output-dir")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
