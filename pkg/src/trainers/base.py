"""
Base class for training loops: metrics stream, snapshots and divergence handling
File: src/trainers/base.py
"""
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import torch
from loguru import logger

from src.diffcore.params import ParameterSet
from src.diffcore.snapshot import save_snapshot
from src.trainers.config import RunConfig
from src.trainers.metrics import MetricsWriter, TrainMetrics
from src.utils.errors import NonFiniteError, TrainingDiverged

METRICS_FILE = "metrics.csv"
SNAPSHOT_FILE = "snapshot.bin"
CONFIG_FILE = "config.txt"


@dataclass
class TrainResult:
    """Outcome of one training run"""
    run_name: str
    pathway: str
    updates_completed: int = 0
    metrics: List[TrainMetrics] = field(default_factory=list)
    metrics_path: Optional[str] = None
    snapshot_path: Optional[str] = None
    start_time: Optional[datetime] = None
    end_time: Optional[datetime] = None
    error_message: Optional[str] = None

    @property
    def duration_seconds(self) -> Optional[float]:
        if self.start_time and self.end_time:
            return (self.end_time - self.start_time).total_seconds()
        return None

    @property
    def final_return(self) -> Optional[float]:
        returns = [row.avg_return for row in self.metrics if row.avg_return is not None]
        return returns[-1] if returns else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_name": self.run_name,
            "pathway": self.pathway,
            "updates_completed": self.updates_completed,
            "metrics_path": self.metrics_path,
            "snapshot_path": self.snapshot_path,
            "duration_seconds": self.duration_seconds,
            "error_message": self.error_message,
        }


class BaseTrainer(ABC):
    """
    One run of `config.updates` updates

    Subclasses build their parameters in `setup` and perform one optimizer
    step per `run_update`, returning that update's metrics row.
    """

    pathway = ""

    def __init__(self, config: RunConfig):
        self.config = config
        self.output_dir = Path(config.output_dir)
        self.params: Optional[ParameterSet] = None

    @abstractmethod
    def setup(self):
        """Create models, parameters and optimizer"""
        pass

    @abstractmethod
    def run_update(self, update: int) -> TrainMetrics:
        """Collect data, compute losses and apply one optimizer step"""
        pass

    def snapshot_tensors(self) -> Dict[str, torch.Tensor]:
        """Everything needed to restore the run: parameters plus extra state"""
        return self.params.tensors()

    def train(self) -> TrainResult:
        """Run the full loop with crash-safe metrics and last-good snapshot on divergence"""
        result = TrainResult(run_name=self.output_dir.name, pathway=self.pathway,
                             start_time=datetime.utcnow())
        self.output_dir.mkdir(parents=True, exist_ok=True)
        (self.output_dir / CONFIG_FILE).write_text(self.config.to_text(), encoding="utf-8")
        result.metrics_path = str(self.output_dir / METRICS_FILE)
        result.snapshot_path = str(self.output_dir / SNAPSHOT_FILE)

        logger.info(f"Starting {self.pathway} training: env={self.config.env} "
                    f"alpha={self.config.alpha} k={self.config.k} seed={self.config.seed}")
        self.setup()
        started = time.perf_counter()

        with MetricsWriter(result.metrics_path) as writer:
            for update in range(self.config.updates):
                last_good = self.snapshot_tensors()
                try:
                    row = self.run_update(update)
                    bad = row.non_finite()
                    if bad:
                        raise NonFiniteError(f"non-finite metrics {bad}", op="metrics", step=update)
                except NonFiniteError as e:
                    save_snapshot(result.snapshot_path, last_good)
                    result.end_time = datetime.utcnow()
                    result.error_message = str(e)
                    logger.error(f"Training diverged at update {update}: {e}; "
                                 f"last good parameters in {result.snapshot_path}")
                    raise TrainingDiverged(str(e), update=update,
                                           snapshot_path=result.snapshot_path) from e

                if self.config.log_wallclock:
                    row.wallclock_s = time.perf_counter() - started
                writer.write(row)
                result.metrics.append(row)
                result.updates_completed = update + 1
                if (update + 1) % self.config.eval_every == 0 or update == 0:
                    logger.info(f"update {update}: " + ", ".join(
                        f"{name}={value:.4f}" for name, value in row.to_dict().items()
                        if isinstance(value, float)))

        save_snapshot(result.snapshot_path, self.snapshot_tensors())
        result.end_time = datetime.utcnow()
        logger.info(f"Training completed: {result.updates_completed} updates in "
                    f"{result.duration_seconds:.1f}s -> {self.output_dir}")
        return result
