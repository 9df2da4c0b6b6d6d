"""Run artifacts on disk: CSV files and plot images.

Fixed schemas:

- train_log.csv: iteration, env_steps, avg_return, critic_loss,
  protagonist_loss, adversary_loss, alpha
- eval.csv: mode, episode, return, steps, outcome, crossing_time_s
- eval_summary.csv: mode, episodes, mean_return, std_return, pass_rate,
  collision_rate, mean_crossing_time_s
- trajectory_<mode>.csv: per-step rows (see env.TRAJECTORY_COLUMNS)

All files are UTF-8 and newline-terminated. Plots: training curve with a
95% confidence band over seed runs, per-mode evaluation boxplots, and
position/velocity-vs-time trajectory plots.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

import numpy as np  # noqa: E402

from .config import load_config  # noqa: E402
from .env import TRAJECTORY_COLUMNS, OutcomeKind  # noqa: E402
from .stats import confidence_band  # noqa: E402
from .training import EvalSummary, RunArtifacts  # noqa: E402

TRAIN_LOG_COLUMNS = (
    "iteration", "env_steps", "avg_return", "critic_loss",
    "protagonist_loss", "adversary_loss", "alpha",
)
EVAL_COLUMNS = ("mode", "episode", "return", "steps", "outcome", "crossing_time_s")
EVAL_SUMMARY_COLUMNS = (
    "mode", "episodes", "mean_return", "std_return", "pass_rate",
    "collision_rate", "mean_crossing_time_s",
)


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def write_run_csvs(artifacts: RunArtifacts, out_dir: str | Path) -> list[str]:
    """Write one run's training log, evaluation and trajectory CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "train_log.csv"
    _write_csv(
        path, TRAIN_LOG_COLUMNS,
        [[row[c] for c in TRAIN_LOG_COLUMNS] for row in artifacts.log_rows],
    )
    written.append(str(path))

    eval_rows, summary_rows = [], []
    for mode, s in artifacts.eval_summaries.items():
        dt = artifacts.config.env.dt
        for ep, (ret, n_steps, outcome) in enumerate(
            zip(s.returns, s.steps, s.outcomes)
        ):
            crossing = n_steps * dt if outcome == OutcomeKind.PASS.value else ""
            eval_rows.append([mode, ep, ret, n_steps, outcome, crossing])
        summary_rows.append([
            mode, len(s.returns), s.mean, s.std, s.pass_rate, s.collision_rate,
            s.mean_crossing_time,
        ])
    path = out / "eval.csv"
    _write_csv(path, EVAL_COLUMNS, eval_rows)
    written.append(str(path))
    path = out / "eval_summary.csv"
    _write_csv(path, EVAL_SUMMARY_COLUMNS, summary_rows)
    written.append(str(path))

    for mode, rows in artifacts.trajectories.items():
        if rows is None:
            continue
        path = out / f"trajectory_{mode}.csv"
        _write_csv(path, TRAJECTORY_COLUMNS, rows)
        written.append(str(path))
    return written


def load_run_dir(run_dir: str | Path) -> RunArtifacts:
    """Rebuild a lightweight RunArtifacts from a run directory's CSVs."""
    run = Path(run_dir)
    cfg = load_config(run / "config.txt")
    artifacts = RunArtifacts(config=cfg, out_dir=str(run))

    log_path = run / "train_log.csv"
    if log_path.exists():
        with open(log_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                artifacts.log_rows.append({
                    "iteration": int(row["iteration"]),
                    "env_steps": int(row["env_steps"]),
                    "avg_return": float(row["avg_return"]),
                    "critic_loss": float(row["critic_loss"]),
                    "protagonist_loss": float(row["protagonist_loss"]),
                    "adversary_loss": float(row["adversary_loss"]),
                    "alpha": float(row["alpha"]),
                })

    eval_path = run / "eval.csv"
    if eval_path.exists():
        by_mode: dict[str, list] = {}
        with open(eval_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                by_mode.setdefault(row["mode"], []).append(row)
        for mode, rows in by_mode.items():
            returns = tuple(float(r["return"]) for r in rows)
            steps = tuple(int(r["steps"]) for r in rows)
            outcomes = tuple(r["outcome"] for r in rows)
            crossings = [
                float(r["crossing_time_s"]) for r in rows if r["crossing_time_s"]
            ]
            arr = np.asarray(returns)
            artifacts.eval_summaries[mode] = EvalSummary(
                mode=mode, returns=returns,
                mean=float(arr.mean()),
                std=float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
                pass_rate=outcomes.count(OutcomeKind.PASS.value) / len(rows),
                collision_rate=outcomes.count(OutcomeKind.COLLISION.value) / len(rows),
                mean_crossing_time=(
                    float(np.mean(crossings)) if crossings else float("nan")
                ),
                steps=steps, outcomes=outcomes,
            )

    for traj_path in sorted(run.glob("trajectory_*.csv")):
        mode = traj_path.stem.removeprefix("trajectory_")
        with open(traj_path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader, None)
            rows = [
                [*map(float, row[:11]), row[11]] for row in reader if row
            ]
        artifacts.trajectories[mode] = rows
    return artifacts


def _plot_training_curve(runs: list[RunArtifacts], out: Path) -> str | None:
    with_logs = [r for r in runs if r.log_rows]
    if not with_logs:
        return None
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n_common = min(len(r.log_rows) for r in with_logs)
    steps = np.array([row["env_steps"] for row in with_logs[0].log_rows[:n_common]])
    curves = np.array([
        [row["avg_return"] for row in r.log_rows[:n_common]] for r in with_logs
    ])
    mean, lo, hi = confidence_band(curves)
    ax.plot(steps, mean, label=f"mean of {len(with_logs)} run(s)")
    ax.fill_between(steps, lo, hi, alpha=0.25, label="95% confidence")
    ax.set_xlabel("environment steps")
    ax.set_ylabel("average return (trailing 20 episodes)")
    ax.set_title("Training return")
    ax.legend()
    fig.tight_layout()
    path = out / "training_curve.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def _plot_eval_boxes(runs: list[RunArtifacts], out: Path) -> str | None:
    modes: dict[str, list[float]] = {}
    for r in runs:
        for mode, s in r.eval_summaries.items():
            modes.setdefault(mode, []).extend(s.returns)
    if not modes:
        return None
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels = sorted(modes)
    ax.boxplot([modes[m] for m in labels], tick_labels=labels)
    ax.set_ylabel("episode return")
    ax.set_title("Evaluation returns by adversary mode")
    fig.tight_layout()
    path = out / "eval_boxplot.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def _plot_trajectories(runs: list[RunArtifacts], out: Path) -> list[str]:
    paths = []
    plotted = set()
    for r in runs:
        for mode, rows in r.trajectories.items():
            if mode in plotted or not rows:
                continue
            plotted.add(mode)
            arr = np.array([row[:11] for row in rows], dtype=np.float64)
            t = arr[:, 0]
            fig, (ax_d, ax_v) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
            ax_d.plot(t, arr[:, 1], label="protagonist d")
            ax_d.plot(t, arr[:, 3], label="adversary 1 d")
            ax_d.plot(t, arr[:, 5], label="adversary 2 d")
            ax_d.axhline(0.0, color="gray", lw=0.8, ls="--")
            ax_d.set_ylabel("distance to center (m)")
            ax_d.legend(fontsize=8)
            ax_d.set_title(f"Trajectory, {mode} adversaries")
            ax_v.plot(t, arr[:, 2], color="brown", label="protagonist v")
            ax_v.set_ylabel("speed (m/s)")
            ax_v.set_xlabel("time (s)")
            ax_v.legend(fontsize=8)
            fig.tight_layout()
            path = out / f"trajectory_{mode}.png"
            fig.savefig(path, dpi=120)
            plt.close(fig)
            paths.append(str(path))
    return paths


def emit_reports(runs, out_dir: str | Path) -> list[str]:
    """Write CSVs and plots for one run or a list of seed runs.

    With several runs the training curve carries a mean +- 1.96*std/sqrt(n)
    band and evaluation boxplots pool the per-episode returns per mode.
    """
    if isinstance(runs, RunArtifacts):
        runs = [runs]
    if not runs:
        raise ValueError("emit_reports needs at least one run")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if len(runs) == 1:
        written.extend(write_run_csvs(runs[0], out))
    else:
        for i, r in enumerate(runs):
            written.extend(write_run_csvs(r, out / f"run{i:02d}"))
    for maybe in (
        _plot_training_curve(runs, out),
        _plot_eval_boxes(runs, out),
        *_plot_trajectories(runs, out),
    ):
        if maybe:
            written.append(maybe)
    return written
