"""Learning-rate schedule and the AdamW update."""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import torch
from torch import nn

from .config import TrainConfig
from .exceptions import NonFiniteGradientError


def lr_at(step: int, cfg: TrainConfig, total_steps: int) -> float:
    """Linear warmup from 0 to ``max_lr``, then cosine decay to 0 at ``total_steps``."""
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    warmup = cfg.warmup_steps
    if step <= warmup:
        return cfg.max_lr * step / warmup
    decay = total_steps - warmup
    if decay <= 0 or step >= total_steps:
        return 0.0
    progress = (step - warmup) / decay
    return 0.5 * cfg.max_lr * (1.0 + math.cos(math.pi * progress))


@dataclass
class AdamMoments:
    """First and second moment estimates, one tensor per parameter."""

    first: list[torch.Tensor] = field(default_factory=list)
    second: list[torch.Tensor] = field(default_factory=list)

    @classmethod
    def zeros_like(cls, params: Sequence[torch.Tensor]) -> "AdamMoments":
        return cls(
            first=[torch.zeros_like(p) for p in params],
            second=[torch.zeros_like(p) for p in params],
        )


@torch.no_grad()
def adamw_step(
    params: Sequence[torch.Tensor],
    grads: Sequence[torch.Tensor],
    moments: AdamMoments,
    cfg: TrainConfig,
    step: int,
    lr: float,
) -> None:
    """One in-place AdamW update with decoupled decay and bias correction.

    ``step`` counts from 1. Same arithmetic as :class:`torch.optim.AdamW`.
    Non-finite gradients raise :class:`NonFiniteGradientError` before any
    parameter or moment is touched.
    """
    bad = [f"params[{i}]" for i, g in enumerate(grads) if not torch.isfinite(g).all()]
    if bad:
        raise NonFiniteGradientError(step, bad)
    beta1, beta2 = cfg.betas
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step
    for p, g, m, v in zip(params, grads, moments.first, moments.second):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {tuple(g.shape)} != {tuple(p.shape)}")
        p.mul_(1.0 - lr * cfg.weight_decay)
        m.mul_(beta1).add_(g, alpha=1.0 - beta1)
        v.mul_(beta2).addcmul_(g, g, value=1.0 - beta2)
        denominator = (v.sqrt() / math.sqrt(correction2)).add_(cfg.eps)
        p.addcdiv_(m, denominator, value=-lr / correction1)


def build_optimizer(model: nn.Module, cfg: TrainConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        model.parameters(),
        lr=0.0,
        betas=cfg.betas,
        eps=cfg.eps,
        weight_decay=cfg.weight_decay,
    )


def set_learning_rate(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr


def check_finite_gradients(
    named_parameters: Iterable[tuple[str, torch.Tensor]], step: int
) -> None:
    """Raise :class:`NonFiniteGradientError` naming every parameter with NaN/Inf grads."""
    bad = [
        name
        for name, p in named_parameters
        if p.grad is not None and not torch.isfinite(p.grad).all()
    ]
    if bad:
        raise NonFiniteGradientError(step, bad)
