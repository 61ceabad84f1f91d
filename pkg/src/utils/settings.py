"""
Runtime settings for experiment runs
File: src/utils/settings.py
"""
import torch
from dotenv import load_dotenv
from loguru import logger
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables
load_dotenv()


class RuntimeSettings(BaseSettings):
    """Process-level settings read from CONDYN_* environment variables"""

    model_config = SettingsConfigDict(env_prefix="CONDYN_", extra="ignore")

    log_dir: str = "logs"
    log_level: str = "INFO"
    # More than one intra-op thread can reorder float reductions
    num_threads: int = 1
    runs_root: str = "runs"

    def apply_torch_defaults(self):
        """Pin torch to 64-bit, deterministic, fixed-thread execution"""
        torch.set_default_dtype(torch.float64)
        torch.use_deterministic_algorithms(True)
        torch.set_num_threads(self.num_threads)
        logger.debug(f"torch configured: float64, deterministic, {self.num_threads} thread(s)")


# Global settings instance
settings = RuntimeSettings()
settings.apply_torch_defaults()
