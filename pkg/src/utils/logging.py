"""
Logging configuration for training and harness commands
File: src/utils/logging.py
"""
import sys
from pathlib import Path

from loguru import logger

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} | {message}"


def setup_logging(log_dir: str = "logs", level: str = "INFO"):
    """Setup loguru sinks: stderr plus rotating run and error logs"""
    Path(log_dir).mkdir(parents=True, exist_ok=True)

    logger.remove()
    logger.add(sys.stderr, level=level, format=LOG_FORMAT)

    logger.add(
        str(Path(log_dir) / "condyn_{time:YYYY-MM-DD}.log"),
        rotation="1 day",
        retention="30 days",
        format=LOG_FORMAT,
        level=level
    )

    logger.add(
        str(Path(log_dir) / "condyn_errors_{time:YYYY-MM-DD}.log"),
        rotation="1 day",
        retention="30 days",
        format=LOG_FORMAT,
        level="ERROR",
        filter=lambda record: record["level"].name == "ERROR"
    )
