"""Differentiable-computation substrate: float64 torch tensors, cells, likelihoods, Adam"""
from src.utils.settings import settings  # noqa: F401  (applies float64 / deterministic defaults)
