"""
Parameter containers, initialization and reverse-mode gradients
File: src/diffcore/params.py
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import torch
import torch.nn as nn
from loguru import logger

from src.utils.errors import NonFiniteError, SnapshotFormatError


def _fan_in(weight: torch.Tensor) -> int:
    if weight.dim() < 2:
        return weight.numel()
    return weight.shape[1] * int(math.prod(weight.shape[2:]))


def init_uniform_(module: nn.Module, generator: torch.Generator):
    """
    Initialize every parameter uniformly in [-1/sqrt(fan_in), +1/sqrt(fan_in)]

    fan_in of a vector parameter (bias) is taken from the first matrix-shaped
    parameter of the same module. Modules list parameters to leave alone in a
    `fixed_init` attribute (log-std and log-variance offsets).
    """
    with torch.no_grad():
        for sub in module.modules():
            local = list(sub.named_parameters(recurse=False))
            if not local:
                continue
            skip = set(getattr(sub, "fixed_init", ()))
            matrices = [p for _, p in local if p.dim() >= 2]
            default_fan = _fan_in(matrices[0]) if matrices else None
            for name, param in local:
                if name in skip:
                    continue
                fan = _fan_in(param) if param.dim() >= 2 else (default_fan or param.numel())
                bound = 1.0 / math.sqrt(max(fan, 1))
                draw = torch.rand(param.shape, generator=generator, dtype=torch.float64)
                param.copy_(draw * (2.0 * bound) - bound)


def zero_parameters_(module: nn.Module):
    """Set every parameter of `module` to zero (test fixtures, identity models)"""
    with torch.no_grad():
        for param in module.parameters():
            param.zero_()


class ParameterSet:
    """
    Named parameters of a group of modules

    Names are "<group>.<torch parameter path>", e.g. "dyn.net.0.weight", and stay
    stable across save/load because they are derived from module structure.
    """

    def __init__(self, groups: Dict[str, nn.Module]):
        self.root = nn.ModuleDict(groups)
        names = [name for name, _ in self.root.named_parameters()]
        if len(names) != len(set(names)):
            raise ValueError("duplicate parameter names in ParameterSet")
        logger.debug(f"ParameterSet initialized with {len(names)} tensors "
                     f"({self.numel()} values) in groups {list(groups)}")

    def named(self) -> Dict[str, nn.Parameter]:
        return dict(self.root.named_parameters())

    def names(self) -> List[str]:
        return list(self.named())

    def trainable(self) -> Dict[str, nn.Parameter]:
        return {name: p for name, p in self.named().items() if p.requires_grad}

    def groups(self) -> Iterator[Tuple[str, nn.Module]]:
        return iter(self.root.items())

    def numel(self) -> int:
        return sum(p.numel() for p in self.root.parameters())

    def initialize(self, generator: torch.Generator):
        """Reproducible initialization: groups in insertion order, one generator"""
        for _, module in self.root.items():
            init_uniform_(module, generator)

    def tensors(self) -> Dict[str, torch.Tensor]:
        """Detached copies of all parameter values"""
        return {name: p.detach().clone() for name, p in self.named().items()}

    def load_tensors(self, tensors: Dict[str, torch.Tensor], strict: bool = True):
        """Copy values into the parameters; names and shapes must match exactly"""
        named = self.named()
        if strict:
            missing = sorted(set(named) - set(tensors))
            unexpected = sorted(set(tensors) - set(named))
            if missing or unexpected:
                raise SnapshotFormatError(
                    f"parameter names differ: missing={missing[:5]} unexpected={unexpected[:5]}"
                )
        with torch.no_grad():
            for name, param in named.items():
                if name not in tensors:
                    continue
                value = tensors[name]
                if tuple(value.shape) != tuple(param.shape):
                    raise SnapshotFormatError(
                        f"{name}: stored shape {tuple(value.shape)} != {tuple(param.shape)}"
                    )
                param.copy_(value)


@dataclass
class GradientRecord:
    """Per-parameter gradients, same names and shapes as the ParameterSet"""
    grads: Dict[str, torch.Tensor] = field(default_factory=dict)

    def __getitem__(self, name: str) -> torch.Tensor:
        return self.grads[name]

    def __iter__(self):
        return iter(self.grads)

    def items(self) -> Iterable[Tuple[str, torch.Tensor]]:
        return self.grads.items()

    def flat(self) -> torch.Tensor:
        return torch.cat([g.reshape(-1) for g in self.grads.values()])


def backward_gradients(loss: torch.Tensor, params: ParameterSet,
                       op_name: Optional[str] = None) -> GradientRecord:
    """
    Exact reverse-mode gradients of a scalar loss w.r.t. every parameter

    Parameters the loss does not reach (or frozen ones) get an exact zero tensor.

    Raises:
        NonFiniteError: loss is NaN/Inf; carries the name of the operation that
            produced it (`op_name` or the autograd node name)
    """
    if loss.dim() != 0:
        raise ValueError(f"loss must be a scalar, got shape {tuple(loss.shape)}")
    if not torch.isfinite(loss):
        op = op_name or (loss.grad_fn.name() if loss.grad_fn is not None else "leaf")
        raise NonFiniteError(f"non-finite loss {float(loss)} produced by {op}", op=op)

    named = params.named()
    active = [(name, p) for name, p in named.items() if p.requires_grad]
    computed = {}
    if active and loss.requires_grad:
        grads = torch.autograd.grad(
            loss, [p for _, p in active], allow_unused=True, retain_graph=False
        )
        computed = {name: g for (name, _), g in zip(active, grads)}

    record = GradientRecord()
    for name, param in named.items():
        grad = computed.get(name)
        record.grads[name] = torch.zeros_like(param) if grad is None else grad.detach()
    return record
