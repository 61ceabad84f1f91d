"""
Test runtime settings, logging sinks and the error hierarchy
File: tests/utils/test_utils.py
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

import torch
from loguru import logger

from src.utils.errors import (
    CondynError, ConfigurationError, DatasetError, DivergenceError, NonFiniteError, ShapeError,
)
from src.utils.logging import setup_logging
from src.utils.settings import RuntimeSettings, settings


def test_torch_defaults_applied():
    assert torch.get_default_dtype() == torch.float64
    assert torch.are_deterministic_algorithms_enabled()
    assert settings.num_threads >= 1


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("CONDYN_LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("CONDYN_RUNS_ROOT", "elsewhere")
    loaded = RuntimeSettings()
    assert loaded.log_level == "DEBUG"
    assert loaded.runs_root == "elsewhere"


def test_setup_logging_writes_run_and_error_logs(tmp_path):
    setup_logging(str(tmp_path / "logs"), "INFO")
    logger.info("run started")
    logger.error("run failed")
    logger.complete()
    names = sorted(p.name for p in (tmp_path / "logs").iterdir())
    assert len(names) == 2
    errors = [p for p in (tmp_path / "logs").iterdir() if "errors" in p.name][0]
    assert "run failed" in errors.read_text()
    assert "run started" not in errors.read_text()
    logger.remove()


def test_error_messages_carry_context():
    assert str(ConfigurationError("bad value", key="alpha", line=3)) == "line 3: 'alpha': bad value"
    assert "x=(2,)" in str(ShapeError("op", x=(2,)))
    assert DatasetError("short", indices=[4]).indices == [4]
    diverged = DivergenceError("nan state", step=5)
    assert isinstance(diverged, NonFiniteError) and isinstance(diverged, CondynError)
    assert diverged.step == 5
