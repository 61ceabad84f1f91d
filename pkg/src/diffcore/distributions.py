"""
Diagonal-Gaussian likelihood primitives
File: src/diffcore/distributions.py
"""
import math

import torch
from torch.distributions import Normal, kl_divergence

from src.utils.errors import ShapeError

LOG_VAR_MIN = -10.0
LOG_VAR_MAX = 5.0
LOG_2PI = math.log(2.0 * math.pi)


def clamp_log_var(log_var: torch.Tensor) -> torch.Tensor:
    """Clamp a log-variance head to [-10, 5] before it is exponentiated"""
    return torch.clamp(log_var, LOG_VAR_MIN, LOG_VAR_MAX)


def diag_normal(mean: torch.Tensor, log_var: torch.Tensor) -> Normal:
    # NaN parameters must reach the callers' finiteness checks, not the constructor
    return Normal(mean, torch.exp(0.5 * log_var), validate_args=False)


def gaussian_diag_nll(x: torch.Tensor, mean: torch.Tensor, log_var: torch.Tensor) -> torch.Tensor:
    """
    Negative log-density of a diagonal Gaussian, summed over the last dimension

    0.5 * sum_i [ (x_i - mu_i)^2 * exp(-log_var_i) + log_var_i + log(2 pi) ]

    `log_var` may broadcast (a shared scalar variance). Leading dimensions are
    kept, so a (B, d) input gives a (B,) result.
    """
    if x.shape != mean.shape:
        raise ShapeError("gaussian_diag_nll", x=x.shape, mean=mean.shape, log_var=log_var.shape)
    try:
        log_var = torch.broadcast_to(log_var, x.shape)
    except RuntimeError:
        raise ShapeError("gaussian_diag_nll", x=x.shape, mean=mean.shape, log_var=log_var.shape)
    return 0.5 * ((x - mean) ** 2 * torch.exp(-log_var) + log_var + LOG_2PI).sum(-1)


def gaussian_kl(mean_q: torch.Tensor, log_var_q: torch.Tensor,
                mean_p: torch.Tensor, log_var_p: torch.Tensor) -> torch.Tensor:
    """KL(q || p) of diagonal Gaussians, summed over the last dimension"""
    if mean_q.shape != mean_p.shape:
        raise ShapeError("gaussian_kl", mean_q=mean_q.shape, mean_p=mean_p.shape)
    kl = kl_divergence(diag_normal(mean_q, log_var_q), diag_normal(mean_p, log_var_p))
    return kl.sum(-1)
