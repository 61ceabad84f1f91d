"""
Adam optimizer over a ParameterSet
File: src/diffcore/optim.py
"""
from typing import Dict, Optional

import torch
from loguru import logger

from src.diffcore.params import GradientRecord, ParameterSet
from src.utils.errors import NonFiniteError


class AdamOptimizer:
    """
    Bias-corrected Adam with per-group learning rates

    Groups are selected by parameter-name prefix ("policy.", "dyn." ...).
    Parameters that are frozen (requires_grad=False) are never stepped.
    """

    def __init__(self, params: ParameterSet, lr: float = 1e-3,
                 group_lrs: Optional[Dict[str, float]] = None,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.default_lr = lr
        group_lrs = group_lrs or {}

        buckets: Dict[float, list] = {}
        self._stepped = []
        for name, param in params.named().items():
            if not param.requires_grad:
                continue
            group_lr = lr
            for prefix, value in group_lrs.items():
                if name.startswith(prefix + "."):
                    group_lr = value
                    break
            buckets.setdefault(group_lr, []).append(param)
            self._stepped.append(name)

        groups = [{"params": ps, "lr": group_lr} for group_lr, ps in buckets.items()]
        self.optimizer = torch.optim.Adam(groups, lr=lr, betas=betas, eps=eps, foreach=False) \
            if groups else None
        self.step_count = 0
        logger.debug(f"AdamOptimizer initialized: {len(self._stepped)} tensors, "
                     f"lrs={sorted(buckets)}")

    def step(self, grads: GradientRecord):
        """Apply one update; raises NonFiniteError naming the first bad parameter"""
        named = self.params.named()
        for name in self._stepped:
            grad = grads[name]
            if not torch.isfinite(grad).all():
                raise NonFiniteError(f"non-finite gradient for parameter {name}", param=name)
        for name in self._stepped:
            named[name].grad = grads[name].clone()
        if self.optimizer is not None:
            self.optimizer.step()
            self.optimizer.zero_grad(set_to_none=True)
        self.step_count += 1

    def state_dict(self):
        return self.optimizer.state_dict() if self.optimizer is not None else {}


def adam_step(optimizer: AdamOptimizer, grads: GradientRecord) -> int:
    """Functional alias: step `optimizer` with `grads`, return the step counter"""
    optimizer.step(grads)
    return optimizer.step_count
