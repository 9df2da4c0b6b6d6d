"""Command-line interface: train, eval, report, compare."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint
from .config import ALGO_DSAC, ALGO_MINIMAX, TrainConfig, load_config, parse_config
from .critic import PROTAGONIST_ACTION_DIM
from .env import AdversaryMode
from .policies import StochasticPolicy
from .stats import welch_t_test
from .training import RunArtifacts, evaluate, train

EVAL_MODE_CHOICES = ("aggressive", "conservative", "random", "train_random")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minimax-dsac",
        description=(
            "Adversarial, risk-sensitive soft actor-critic on an "
            "unsignalized-intersection simulator"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training job")
    p_train.add_argument("--config", type=Path, help="key=value config file")
    p_train.add_argument("--algo", choices=(ALGO_DSAC, ALGO_MINIMAX),
                         help="override the configured algorithm")
    p_train.add_argument("--seed", type=int, help="override the configured seed")
    p_train.add_argument("--out", type=Path, required=True, help="run directory")
    p_train.add_argument("--progress", action="store_true",
                         help="print periodic progress lines")

    p_eval = sub.add_parser("eval", help="evaluate a checkpointed protagonist")
    p_eval.add_argument("--checkpoint", type=Path, required=True)
    p_eval.add_argument("--mode", choices=EVAL_MODE_CHOICES, required=True)
    p_eval.add_argument("--episodes", type=int, default=20)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out", type=Path, required=True)

    p_report = sub.add_parser("report", help="aggregate CSVs/plots across runs")
    p_report.add_argument("--runs", type=Path, nargs="+", required=True)
    p_report.add_argument("--out", type=Path, required=True)

    p_cmp = sub.add_parser("compare", help="Welch t-test between two eval.csv files")
    p_cmp.add_argument("--a", type=Path, required=True)
    p_cmp.add_argument("--b", type=Path, required=True)
    return parser


def _cmd_train(args) -> int:
    cfg = load_config(args.config) if args.config else TrainConfig()
    overrides = []
    if args.algo is not None:
        overrides.append(f"algo = {args.algo}")
    if args.seed is not None:
        overrides.append(f"seed = {args.seed}")
    if overrides:
        cfg = parse_config("\n".join(overrides), base=cfg)
    artifacts = train(
        cfg, out_dir=args.out,
        progress_every=10 * cfg.log_interval if args.progress else 0,
    )
    print(f"run complete: {cfg.algo}, seed {cfg.seed}, {cfg.total_steps} env steps")
    for mode, summary in artifacts.eval_summaries.items():
        print(
            f"  eval {mode:13s} mean return {summary.mean:8.1f} "
            f"pass rate {summary.pass_rate:.2f}"
        )
    print(f"artifacts in {args.out}")
    return 0


def _cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    cfg = parse_config(ckpt["config"])
    protagonist = StochasticPolicy(
        ckpt["nets"]["protagonist"], PROTAGONIST_ACTION_DIM,
        cfg.env.protagonist_accel_limit, cfg.log_std_min, cfg.log_std_max,
    )
    mode = AdversaryMode(args.mode)
    rng = np.random.default_rng(args.seed)
    summary, trajectory = evaluate(
        protagonist, mode, args.episodes, cfg, rng, record_first_trajectory=True
    )
    artifacts = RunArtifacts(config=cfg, out_dir=str(args.out))
    artifacts.eval_summaries[mode.value] = summary
    artifacts.trajectories[mode.value] = trajectory
    from .reports import write_run_csvs

    args.out.mkdir(parents=True, exist_ok=True)
    write_run_csvs(artifacts, args.out)
    print(
        f"{mode.value}: mean return {summary.mean:.1f} (std {summary.std:.1f}), "
        f"pass rate {summary.pass_rate:.2f}, collision rate "
        f"{summary.collision_rate:.2f} over {args.episodes} episodes"
    )
    return 0


def _cmd_report(args) -> int:
    from .reports import emit_reports, load_run_dir

    runs = [load_run_dir(d) for d in args.runs]
    written = emit_reports(runs, args.out)
    for path in written:
        print(path)
    return 0


def _read_eval_returns(path: Path) -> dict[str, list[float]]:
    by_mode: dict[str, list[float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            by_mode.setdefault(row["mode"], []).append(float(row["return"]))
    if not by_mode:
        raise ValueError(f"{path}: no evaluation rows")
    return by_mode


def _cmd_compare(args) -> int:
    a_modes = _read_eval_returns(args.a)
    b_modes = _read_eval_returns(args.b)
    common = sorted(set(a_modes) & set(b_modes))
    if not common:
        print("no common adversary modes between the two files", file=sys.stderr)
        return 1
    for mode in common:
        t, p = welch_t_test(a_modes[mode], b_modes[mode])
        print(
            f"mode={mode} mean_a={np.mean(a_modes[mode]):.2f} "
            f"mean_b={np.mean(b_modes[mode]):.2f} t={t:.4f} p={p:.6g}"
        )
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "eval": _cmd_eval,
        "report": _cmd_report,
        "compare": _cmd_compare,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
