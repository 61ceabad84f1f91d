"""
Central finite-difference gradient checking
File: src/diffcore/gradcheck.py
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import torch

from src.diffcore.params import ParameterSet, backward_gradients


@dataclass
class GradCheckResult:
    """Analytic vs numerical gradients of one loss"""
    relative_error: float
    per_param: Dict[str, float] = field(default_factory=dict)
    coords_checked: int = 0

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.relative_error <= tolerance


def _rel(a: torch.Tensor, n: torch.Tensor) -> float:
    denom = float(a.norm() + n.norm())
    if denom == 0.0:
        return 0.0
    return float((a - n).norm()) / denom


def check_gradients(loss_fn: Callable[[], torch.Tensor], params: ParameterSet,
                    h: float = 1e-5, max_coords: Optional[int] = None,
                    generator: Optional[torch.Generator] = None) -> GradCheckResult:
    """
    Compare backward_gradients against central differences (f(p+h) - f(p-h)) / 2h

    `loss_fn` must rebuild the loss from the current parameter values and be
    deterministic (re-seed any sampling inside it). With `max_coords`, each
    parameter tensor is probed at that many randomly chosen coordinates.
    The relative error is ||a - n|| / (||a|| + ||n||) over all probed coordinates.
    """
    analytic = backward_gradients(loss_fn(), params)
    picked_a, picked_n = [], []
    per_param = {}
    total = 0

    for name, param in params.trainable().items():
        flat = param.data.view(-1)
        if max_coords is not None and flat.numel() > max_coords:
            coords = torch.randperm(flat.numel(), generator=generator)[:max_coords]
        else:
            coords = torch.arange(flat.numel())
        numeric = torch.empty(len(coords), dtype=torch.float64)
        with torch.no_grad():
            for j, idx in enumerate(coords.tolist()):
                original = flat[idx].item()
                flat[idx] = original + h
                plus = float(loss_fn())
                flat[idx] = original - h
                minus = float(loss_fn())
                flat[idx] = original
                numeric[j] = (plus - minus) / (2.0 * h)
        a = analytic[name].reshape(-1)[coords]
        per_param[name] = _rel(a, numeric)
        picked_a.append(a)
        picked_n.append(numeric)
        total += len(coords)

    a_all = torch.cat(picked_a) if picked_a else torch.zeros(0)
    n_all = torch.cat(picked_n) if picked_n else torch.zeros(0)
    return GradCheckResult(relative_error=_rel(a_all, n_all), per_param=per_param,
                           coords_checked=total)
