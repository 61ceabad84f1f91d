"""
Command-line surface: train, ablate-k, robustness, gen-data, baseline, report
File: src/harness/cli.py

Exit codes: 0 success, 1 training divergence, 2 configuration / I/O / format error.
"""
import argparse
from typing import List, Optional

from loguru import logger

from src.harness.baseline import random_policy_return
from src.harness.experiment import k_ablation_plan, run_experiment, run_plan
from src.harness.report import emit_report
from src.harness.robustness import evaluate_robustness
from src.ssm.dataset import generate_expert_dataset
from src.trainers.config import load_config
from src.utils.errors import CondynError, NonFiniteError, TrainingDiverged
from src.utils.logging import setup_logging
from src.utils.settings import settings

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_ERROR = 2


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condyn",
        description="Consistency-regularized dynamics models for model-based RL",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="Run one training configuration")
    train.add_argument("--config", required=True, help="Path to a key = value config file")
    train.add_argument("--seed", type=int, default=None, help="Overrides the config seed")
    train.add_argument("--output-dir", default=None, help="Overrides the config output_dir")

    ablate = sub.add_parser("ablate-k", help="Cross product of unroll lengths, seeds and alphas")
    ablate.add_argument("--config", required=True)
    ablate.add_argument("--ks", type=_int_list, default=[5, 20])
    ablate.add_argument("--seeds", type=_int_list, default=[0, 1, 2])
    ablate.add_argument("--alphas", type=_float_list, default=None,
                        help="Defaults to the config alpha")
    ablate.add_argument("--model-free", action="store_true",
                        help="Add model-free A2C cells (no dynamics model, no consistency)")
    ablate.add_argument("--workers", type=int, default=1, help="Parallel cell processes")
    ablate.add_argument("--out", default=None, help="Plan root directory")

    robustness = sub.add_parser("robustness", help="Imagination log-likelihood at a long horizon")
    robustness.add_argument("--snapshot", required=True)
    robustness.add_argument("--data", required=True, help="Expert dataset file")
    robustness.add_argument("--horizon", type=int, default=50)
    robustness.add_argument("--seed", type=int, default=0)
    robustness.add_argument("--heldout", type=int, default=20,
                            help="Evaluate the last N trajectories (0 = all)")

    gen = sub.add_parser("gen-data", help="Generate a scripted-expert trajectory dataset")
    gen.add_argument("--env", required=True)
    gen.add_argument("--episodes", type=int, default=200)
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)

    baseline = sub.add_parser("baseline", help="Mean return of a uniform random policy")
    baseline.add_argument("--env", required=True)
    baseline.add_argument("--episodes", type=int, default=100)
    baseline.add_argument("--seed", type=int, default=0)

    report = sub.add_parser("report", help="Aggregate run metrics across seeds")
    report.add_argument("--runs", required=True)
    report.add_argument("--out", required=True)
    report.add_argument("--window", type=int, default=100, help="Smoothing window")
    report.add_argument("--final-window", type=int, default=50)
    return parser


def cmd_train(args) -> int:
    result = run_experiment(args.config, seed=args.seed, output_dir=args.output_dir)
    print(f"metrics: {result.metrics_path}")
    print(f"snapshot: {result.snapshot_path}")
    return EXIT_OK


def cmd_ablate_k(args) -> int:
    config = load_config(args.config)
    plan = k_ablation_plan(config, args.ks, args.seeds, args.alphas, args.model_free, args.out)
    results = run_plan(plan, workers=args.workers)
    for cell, result in zip(plan.cells, results):
        print(f"{cell.experiment_id} seed {cell.seed}: final return {result.final_return}")
    return EXIT_OK


def cmd_robustness(args) -> int:
    value = evaluate_robustness(args.snapshot, args.data, args.horizon, args.seed, args.heldout)
    print(f"imagination_ll@{args.horizon}: {value!r}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    dataset = generate_expert_dataset(args.env, args.episodes, seed=args.seed)
    dataset.save(args.out)
    print(f"{len(dataset)} trajectories -> {args.out}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    result = random_policy_return(args.env, args.episodes, seed=args.seed)
    print(f"random-policy mean return: {result.mean_return!r} (std {result.std_return!r})")
    return EXIT_OK


def cmd_report(args) -> int:
    frames = emit_report(args.runs, args.out, args.window, args.final_window)
    print(f"{len(frames['aggregate'])} aggregate rows -> {args.out}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "ablate-k": cmd_ablate_k,
    "robustness": cmd_robustness,
    "gen-data": cmd_gen_data,
    "baseline": cmd_baseline,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(settings.log_dir, settings.log_level)
    try:
        return COMMANDS[args.command](args)
    except (TrainingDiverged, NonFiniteError) as e:
        logger.error(f"{args.command} diverged: {e}")
        return EXIT_DIVERGED
    except (CondynError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_ERROR
