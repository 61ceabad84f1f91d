"""
Per-update training metrics and the versioned metrics CSV
File: src/trainers/metrics.py
"""
import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import List, Optional

from loguru import logger

from src.utils.errors import ReportError

METRICS_VERSION = "condyn-metrics v1"
METRIC_COLUMNS = [
    "update", "avg_return", "avg_discounted_return", "rl_loss", "model_nll",
    "consistency_loss", "elbo", "imitation_loss", "imagination_ll",
    "collapse_monitor", "wallclock_s",
]


@dataclass
class TrainMetrics:
    """One row per update; None means the metric does not apply to the pathway"""
    update: int
    avg_return: Optional[float] = None
    avg_discounted_return: Optional[float] = None
    rl_loss: Optional[float] = None
    model_nll: Optional[float] = None
    consistency_loss: Optional[float] = None
    elbo: Optional[float] = None
    imitation_loss: Optional[float] = None
    imagination_ll: Optional[float] = None
    collapse_monitor: Optional[float] = None
    wallclock_s: Optional[float] = None

    def to_dict(self):
        return asdict(self)

    def non_finite(self) -> List[str]:
        return [f.name for f in fields(self)
                if isinstance(getattr(self, f.name), float) and not math.isfinite(getattr(self, f.name))]


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class MetricsWriter:
    """
    Append-only metrics CSV; every row is flushed as soon as it is written

    The first line is "# condyn-metrics v1", then the fixed header.
    """

    def __init__(self, path: str):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(self.path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._handle.write(f"# {METRICS_VERSION}\n")
        self._writer.writerow(METRIC_COLUMNS)
        self._handle.flush()
        self._last_update = -1
        logger.debug(f"MetricsWriter initialized: {self.path}")

    def write(self, row: TrainMetrics):
        if row.update <= self._last_update:
            raise ValueError(f"update index must increase: {row.update} after {self._last_update}")
        values = row.to_dict()
        self._writer.writerow([_format(values[name]) for name in METRIC_COLUMNS])
        self._handle.flush()
        self._last_update = row.update

    def close(self):
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()


def read_metrics_version(path: str) -> str:
    """Version tag from the first line of a metrics CSV"""
    with open(path, encoding="utf-8") as handle:
        first = handle.readline().strip()
    if not first.startswith("# "):
        raise ReportError(f"{path}: missing metrics version line")
    return first[2:]
