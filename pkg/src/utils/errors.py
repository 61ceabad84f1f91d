"""
Exception hierarchy shared by every subpackage
File: src/utils/errors.py
"""
from typing import List, Optional


class CondynError(Exception):
    """Base class for all errors raised by this package"""


class ConfigurationError(CondynError):
    """Invalid configuration value, key or environment name"""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"'{key}': "
        super().__init__(prefix + message)


class ShapeError(CondynError, ValueError):
    """Operands with incompatible shapes"""

    def __init__(self, op: str, **operands):
        self.op = op
        self.operands = {name: tuple(shape) for name, shape in operands.items()}
        detail = ", ".join(f"{name}={shape}" for name, shape in self.operands.items())
        super().__init__(f"{op}: shape mismatch ({detail})")


class NonFiniteError(CondynError, FloatingPointError):
    """A NaN or Inf appeared in a loss, gradient or prediction"""

    def __init__(self, message: str, op: Optional[str] = None,
                 step: Optional[int] = None, param: Optional[str] = None):
        self.op = op
        self.step = step
        self.param = param
        super().__init__(message)


class DivergenceError(NonFiniteError):
    """A model unroll produced a non-finite state"""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})", op="unroll", step=step)


class TrainingDiverged(CondynError):
    """Training aborted; the last finite parameters were written to `snapshot_path`"""

    def __init__(self, message: str, update: int, snapshot_path: Optional[str] = None):
        self.update = update
        self.snapshot_path = snapshot_path
        super().__init__(f"update {update}: {message}")


class UnsupportedEnvironmentError(CondynError):
    """Operation not available for the given environment"""


class SnapshotFormatError(CondynError):
    """Snapshot file does not match the expected layout"""


class DatasetError(CondynError):
    """Expert dataset is malformed or unsuitable for the request"""

    def __init__(self, message: str, indices: Optional[List[int]] = None):
        self.indices = list(indices or [])
        if self.indices:
            message = f"{message}: trajectories {self.indices}"
        super().__init__(message)


class ReportError(CondynError):
    """Run outputs cannot be aggregated"""


class EnvironmentStepError(CondynError):
    """An environment transition failed during a closed-loop rollout"""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"step {step}: {message}")
