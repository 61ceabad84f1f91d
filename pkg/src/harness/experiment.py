"""
Experiment plans: single runs, k-ablation cross products and their execution
File: src/harness/experiment.py
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

from loguru import logger

from src.trainers.base import TrainResult
from src.trainers.config import RunConfig, load_config
from src.trainers.obs_space import train_obs_space
from src.trainers.state_space import ensure_expert_dataset, train_state_space
from src.utils.errors import ConfigurationError


@dataclass
class ExperimentCell:
    """One (config, seed) run owning its output directory"""
    experiment_id: str
    seed: int
    config: RunConfig

    @property
    def output_dir(self) -> str:
        return self.config.output_dir


@dataclass
class ExperimentPlan:
    """Cells to run; aggregation is the mean and std over seeds per experiment"""
    name: str
    root: str
    cells: List[ExperimentCell] = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self):
        outputs = [cell.output_dir for cell in self.cells]
        duplicates = sorted({path for path in outputs if outputs.count(path) > 1})
        if duplicates:
            raise ConfigurationError(f"plan {self.name} reuses output paths {duplicates}")
        keys = [(cell.experiment_id, cell.seed) for cell in self.cells]
        if len(keys) != len(set(keys)):
            raise ConfigurationError(f"plan {self.name} repeats a seed within an experiment")

    @property
    def experiments(self) -> List[str]:
        return sorted({cell.experiment_id for cell in self.cells})


def run_config(config: RunConfig) -> TrainResult:
    """Dispatch to the trainer for the configured pathway"""
    if config.pathway == "ssm":
        return train_state_space(config, ensure_expert_dataset(config))
    return train_obs_space(config)


def run_experiment(config_path: str, seed: Optional[int] = None,
                   output_dir: Optional[str] = None) -> TrainResult:
    """Load a config file, apply command-line overrides and train"""
    config = load_config(config_path)
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if output_dir is not None:
        overrides["output_dir"] = output_dir
    if overrides:
        config = config.with_overrides(**overrides)
    return run_config(config)


def _format_alpha(alpha: float) -> str:
    return f"{alpha:g}".replace(".", "p")


def k_ablation_plan(config: RunConfig, ks: Sequence[int], seeds: Sequence[int],
                    alphas: Optional[Sequence[float]] = None, model_free: bool = False,
                    root: Optional[str] = None) -> ExperimentPlan:
    """
    Cross product of unroll lengths, seeds and alphas

    Layout: <root>/k<k>_alpha<alpha>/seed<seed>; the model-free ablation adds
    <root>/model_free/seed<seed>.
    """
    if not ks or not seeds:
        raise ConfigurationError("k-ablation needs at least one k and one seed")
    if len(set(seeds)) != len(seeds):
        raise ConfigurationError(f"seeds must be distinct, got {list(seeds)}", key="seeds")
    root = root or str(Path(config.output_dir) / "ablate-k")
    alphas = list(alphas) if alphas else [config.alpha]
    cells = []
    for k in ks:
        for alpha in alphas:
            experiment_id = f"k{k}_alpha{_format_alpha(alpha)}"
            for seed in seeds:
                output = str(Path(root) / experiment_id / f"seed{seed}")
                cells.append(ExperimentCell(experiment_id, seed, config.with_overrides(
                    k=k, alpha=alpha, seed=seed, output_dir=output)))
    if model_free:
        for seed in seeds:
            output = str(Path(root) / "model_free" / f"seed{seed}")
            cells.append(ExperimentCell("model_free", seed, config.with_overrides(
                use_model=False, seed=seed, output_dir=output)))
    plan = ExperimentPlan(name="ablate-k", root=root, cells=cells)
    logger.info(f"k-ablation plan: {len(cells)} cells in {len(plan.experiments)} experiments under {root}")
    return plan


def _run_cell(cell: ExperimentCell) -> TrainResult:
    logger.info(f"Running cell {cell.experiment_id} seed {cell.seed}")
    return run_config(cell.config)


def run_plan(plan: ExperimentPlan, workers: int = 1) -> List[TrainResult]:
    """Run every cell; results are returned in plan order for any worker count"""
    if workers < 1:
        raise ConfigurationError(f"workers must be >= 1, got {workers}", key="workers")
    if workers == 1:
        return [_run_cell(cell) for cell in plan.cells]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(_run_cell, cell) for cell in plan.cells]
        return [future.result() for future in futures]
