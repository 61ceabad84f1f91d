"""Consistency-regularized dynamics models for model-based RL"""
from src.utils.settings import settings  # noqa: F401  (float64 / deterministic torch defaults)
