"""
Long-horizon imagination evaluation of a trained state-space snapshot
File: src/harness/robustness.py
"""
from loguru import logger

from src.diffcore.params import ParameterSet
from src.diffcore.snapshot import load_snapshot, split_prefix
from src.ssm.dataset import ExpertDataset
from src.ssm.model import StateSpaceModel
from src.trainers.state_space import SSM_CONFIG_KEY, imagination_metric, ssm_config_from_tensor
from src.utils.errors import ConfigurationError, DatasetError, SnapshotFormatError


def load_state_space_model(snapshot_path: str) -> StateSpaceModel:
    tensors = load_snapshot(snapshot_path)
    if SSM_CONFIG_KEY not in tensors:
        raise SnapshotFormatError(f"{snapshot_path} is not a state-space snapshot")
    model = StateSpaceModel(ssm_config_from_tensor(tensors[SSM_CONFIG_KEY]))
    ParameterSet({"ssm": model}).load_tensors(split_prefix(tensors, "ssm"))
    return model


def evaluate_robustness(snapshot_path: str, data_path: str, horizon: int = 50,
                        seed: int = 0, heldout: int = 20) -> float:
    """
    Imagination log-likelihood of the snapshot's model at `horizon` steps

    Evaluates the last `heldout` trajectories of the dataset (the held-out
    split used during training) with the run's evaluation stream, so
    horizon = training T reproduces the logged metric.
    """
    if horizon < 1:
        raise ConfigurationError(f"horizon must be >= 1, got {horizon}", key="horizon")
    dataset = ExpertDataset.load(data_path)
    first = len(dataset) - heldout if 0 < heldout < len(dataset) else 0
    indices = list(range(first, len(dataset)))
    short = [i for i in indices if dataset[i].length < horizon]
    if short:
        raise DatasetError(f"horizon {horizon} needs {horizon + 1} observations", indices=short)

    model = load_state_space_model(snapshot_path)
    value = imagination_metric(model, [dataset[i] for i in indices], horizon, seed)
    logger.info(f"Imagination log-likelihood at horizon {horizon} over {len(indices)} "
                f"trajectories: {value:.6f}")
    return value
