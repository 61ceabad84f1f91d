"""
Aggregate metrics across seeds: per-update mean/std, smoothed curves and
final-window summaries
File: src/harness/report.py
"""
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from src.trainers.base import CONFIG_FILE, METRICS_FILE
from src.trainers.config import parse_config
from src.trainers.metrics import METRIC_COLUMNS, METRICS_VERSION, read_metrics_version
from src.utils.errors import ReportError

FINAL_WINDOW = 50
SMOOTHING_WINDOW = 100
AGGREGATED_METRICS = [name for name in METRIC_COLUMNS if name not in ("update", "wallclock_s")]


@dataclass
class ReportRow:
    experiment_id: str
    seed: int
    metric: str
    update: int
    value: float


REPORT_ROW_COLUMNS = [f.name for f in fields(ReportRow)]


def find_runs(runs_dir: str) -> List[Path]:
    """Run directories (those holding a metrics CSV) under `runs_dir`, sorted"""
    root = Path(runs_dir)
    if not root.is_dir():
        raise ReportError(f"no runs found: {runs_dir} is not a directory")
    runs = sorted(path.parent for path in root.rglob(METRICS_FILE))
    if not runs:
        raise ReportError(f"no runs found under {runs_dir}")
    return runs


def _run_identity(run_dir: Path, root: Path) -> Tuple[str, int]:
    config_path = run_dir / CONFIG_FILE
    if config_path.exists():
        seed = parse_config(config_path.read_text(encoding="utf-8")).seed
    else:
        digits = "".join(ch for ch in run_dir.name if ch.isdigit())
        seed = int(digits) if digits else 0
    if run_dir == root:
        return root.name, seed
    return run_dir.parent.relative_to(root).as_posix(), seed


def load_report_rows(runs_dir: str) -> pd.DataFrame:
    """Long-format ReportRow frame of every finite metric value of every run"""
    root = Path(runs_dir)
    frames = []
    versions = {}
    for run_dir in find_runs(runs_dir):
        path = run_dir / METRICS_FILE
        versions[str(path)] = read_metrics_version(str(path))
        experiment, seed = _run_identity(run_dir, root)
        metrics = pd.read_csv(path, comment="#")
        long = metrics.melt(id_vars="update", value_vars=AGGREGATED_METRICS,
                            var_name="metric", value_name="value").dropna(subset=["value"])
        long["experiment_id"] = experiment
        long["seed"] = seed
        frames.append(long[REPORT_ROW_COLUMNS])

    found = set(versions.values())
    if found != {METRICS_VERSION}:
        raise ReportError(f"metrics header versions differ across runs: {sorted(found)}")
    rows = pd.concat(frames, ignore_index=True)
    if not np.isfinite(rows["value"].to_numpy(dtype=np.float64)).all():
        raise ReportError("non-finite metric values in run outputs")
    return rows


def aggregate(rows: pd.DataFrame, smoothing_window: int = SMOOTHING_WINDOW) -> pd.DataFrame:
    """
    Mean and population std over seeds per (experiment, update, metric)

    Only updates present in every seed of an experiment are kept.
    """
    out = []
    for experiment, group in rows.groupby("experiment_id", sort=True):
        per_seed = group.groupby("seed")["update"].apply(set)
        shared = set.intersection(*per_seed.tolist())
        kept = group[group["update"].isin(shared)]
        stats = (kept.groupby(["update", "metric"])["value"]
                 .agg(mean="mean", std=lambda v: float(np.std(v, ddof=0)))
                 .unstack("metric"))
        wide = pd.DataFrame(index=stats.index)
        for metric in [m for m in AGGREGATED_METRICS if ("mean", m) in stats.columns]:
            wide[f"{metric}_mean"] = stats[("mean", metric)]
            wide[f"{metric}_std"] = stats[("std", metric)]
            wide[f"{metric}_smooth"] = stats[("mean", metric)].rolling(
                smoothing_window, min_periods=1).mean()
        wide.insert(0, "n_seeds", len(per_seed))
        wide.insert(0, "experiment_id", experiment)
        out.append(wide.reset_index())
    return pd.concat(out, ignore_index=True)


def final_window_summary(rows: pd.DataFrame, window: int = FINAL_WINDOW) -> pd.DataFrame:
    """Per experiment and metric: mean over seeds of each seed's last-`window` mean"""
    per_seed = (rows.sort_values("update")
                .groupby(["experiment_id", "metric", "seed"])["value"]
                .apply(lambda v: v.tail(window).mean())
                .rename("final"))
    summary = per_seed.groupby(["experiment_id", "metric"]).agg(
        final_mean="mean", final_std=lambda v: float(np.std(v, ddof=0)), n_seeds="count")
    return summary.reset_index()


def updates_to_threshold(series: pd.Series, reference: float, fraction: float = 0.9,
                         window: int = SMOOTHING_WINDOW) -> Optional[int]:
    """
    First update at which the smoothed curve reaches `fraction` of `reference`

    For a negative reference the threshold is reference - (1 - fraction) * |reference|,
    so "90% of the final return" stays reachable for cost-style returns.
    """
    threshold = reference - (1.0 - fraction) * abs(reference)
    smoothed = series.sort_index().rolling(window, min_periods=1).mean()
    reached = smoothed[smoothed >= threshold]
    return None if reached.empty else int(reached.index[0])


def emit_report(runs_dir: str, out_path: str, smoothing_window: int = SMOOTHING_WINDOW,
                final_window: int = FINAL_WINDOW) -> Dict[str, pd.DataFrame]:
    """Write the aggregate CSV and `<out>_summary.csv`; returns both frames"""
    rows = load_report_rows(runs_dir)
    table = aggregate(rows, smoothing_window)
    summary = final_window_summary(rows, final_window)

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, index=False)
    summary_path = out.with_name(f"{out.stem}_summary.csv")
    summary.to_csv(summary_path, index=False)
    logger.info(f"Report written: {out} ({len(table)} rows), {summary_path} "
                f"({rows['experiment_id'].nunique()} experiments)")
    return {"aggregate": table, "summary": summary}
