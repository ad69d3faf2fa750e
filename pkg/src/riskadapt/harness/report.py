"""Rendering of experiment outputs: metric plots and sweep tables.

Reads the CSVs written by run_experiment and the sweep command and emits
static PNG line plots (across-seed mean with a standard-error band, plus
faint per-seed traces) and the risk-sweep summary in plain text and CSV.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import _METRIC_FIELDS
from .sweep import SweepResult

_METRIC_LABELS = {
    "mean_return": "mean return",
    "failure_rate": "failure rate",
    "mean_risk_alpha": "mean risk alpha",
    "q_estimation_error": "Q estimation error",
}


def read_csv_columns(path) -> dict[str, np.ndarray]:
    """Parse a metrics CSV into {column: float array}."""
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"{path}: ragged CSV row {row}")
    columns = {}
    for j, name in enumerate(header):
        columns[name] = np.array([float(row[j]) for row in rows])
    return columns


def read_sweep_detail(path) -> SweepResult:
    """Rebuild a SweepResult from the per-(setting, alpha) detail CSV."""
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if lines[0] != "setting,alpha,failure_rate,mean_return":
        raise ValueError(f"{path}: unexpected sweep CSV header {lines[0]!r}")
    settings: list[str] = []
    rows: dict[str, list[tuple[float, float, float]]] = {}
    for line in lines[1:]:
        name, alpha, failure, ret = line.split(",")
        if name not in rows:
            settings.append(name)
            rows[name] = []
        rows[name].append((float(alpha), float(failure), float(ret)))
    alphas = [entry[0] for entry in rows[settings[0]]]
    for name in settings:
        if [entry[0] for entry in rows[name]] != alphas:
            raise ValueError(f"{path}: settings disagree on the alpha grid")
    failure_rates = np.array([[entry[1] for entry in rows[name]] for name in settings])
    mean_returns = np.array([[entry[2] for entry in rows[name]] for name in settings])
    return SweepResult(settings, alphas, failure_rates, mean_returns)


def sweep_summary_csv_lines(sweep: SweepResult) -> list[str]:
    lines = ["setting,best_failure,best_alpha,mean_failure,worst_failure,spread"]
    for row in sweep.summary_rows():
        lines.append(f"{row['setting']},{row['best_failure']!r},{row['best_alpha']!r},"
                     f"{row['mean_failure']!r},{row['worst_failure']!r},{row['spread']!r}")
    return lines


def plot_metric(field_name: str, aggregate, per_seed: list, out_path) -> None:
    """One metric's learning curve: mean, stderr band, faint per-seed lines."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for columns in per_seed:
        ax.plot(columns["step"], columns[field_name], color="gray",
                alpha=0.35, linewidth=0.8)
    if aggregate is not None:
        steps = aggregate["step"]
        mean = aggregate[field_name]
        stderr = aggregate[f"{field_name}_stderr"]
        ax.fill_between(steps, mean - stderr, mean + stderr, alpha=0.25)
        ax.plot(steps, mean, linewidth=1.6)
    ax.set_xlabel("environment step")
    ax.set_ylabel(_METRIC_LABELS.get(field_name, field_name))
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


@dataclass
class ReportOutput:
    written: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def report(results_dir, out_dir=None) -> ReportOutput:
    """Render everything recognizable inside results_dir.

    Emits one PNG per metric when metric CSVs exist and the sweep summary
    (text + CSV) when a sweep detail file exists.  Unreadable individual
    series are noted and skipped; a directory with nothing to render is an
    error.
    """
    results = Path(results_dir)
    if not results.is_dir():
        raise FileNotFoundError(f"no results directory at {results}")
    out = Path(out_dir) if out_dir is not None else results
    out.mkdir(parents=True, exist_ok=True)
    output = ReportOutput()

    aggregate = None
    aggregate_path = results / "metrics.csv"
    if aggregate_path.exists():
        try:
            aggregate = read_csv_columns(aggregate_path)
        except ValueError as exc:
            output.notes.append(f"skipped {aggregate_path.name}: {exc}")
    per_seed = []
    for path in sorted(results.glob("metrics_seed*.csv")):
        try:
            per_seed.append(read_csv_columns(path))
        except ValueError as exc:
            output.notes.append(f"skipped {path.name}: {exc}")

    if aggregate is not None or per_seed:
        have_rows = (aggregate is not None and aggregate["step"].size) or any(
            columns["step"].size for columns in per_seed)
        if have_rows:
            for field_name in _METRIC_FIELDS:
                plot_path = out / f"plot_{field_name}.png"
                plot_metric(field_name, aggregate, per_seed, plot_path)
                output.written.append(plot_path)
        else:
            output.notes.append("metric CSVs contain no evaluation rows; no plots")

    sweep_path = results / "sweep_detail.csv"
    if sweep_path.exists():
        sweep = read_sweep_detail(sweep_path)
        text_path = out / "sweep_summary.txt"
        text_path.write_text(sweep.to_text() + "\n", encoding="utf-8")
        csv_path = out / "sweep_summary.csv"
        csv_path.write_text("\n".join(sweep_summary_csv_lines(sweep)) + "\n",
                            encoding="utf-8")
        output.written.extend([text_path, csv_path])

    if not output.written and not output.notes:
        raise FileNotFoundError(f"no results to report in {results}")
    return output
