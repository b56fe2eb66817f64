"""Finite-difference verification of autograd gradients."""

from collections.abc import Callable

import torch
from torch import nn

from .precision import DTensor


def _relative_error(analytic: torch.Tensor, numeric: torch.Tensor, eps: float) -> float:
    if analytic.numel() == 0:
        return 0.0
    error = (analytic - numeric).abs() / (analytic.abs() + eps)
    return float(error.max())


def finite_difference_check(
    f: Callable[[DTensor], DTensor], x: DTensor, eps: float = 1e-6
) -> float:
    """Max relative error between autograd and central differences.

    Returns ``max_k |g_k - fd_k| / (|g_k| + eps)`` where ``fd_k`` uses the
    step ``eps`` along coordinate ``k``. Run in float64 for meaningful values.
    """
    point = x.detach().clone().requires_grad_(True)
    value = f(point)
    (analytic,) = torch.autograd.grad(value, point, allow_unused=True)
    if analytic is None:
        analytic = torch.zeros_like(point)

    numeric = torch.zeros_like(point)
    flat_point = point.detach().clone().reshape(-1)
    flat_numeric = numeric.reshape(-1)
    with torch.no_grad():
        for k in range(flat_point.numel()):
            original = flat_point[k].item()
            flat_point[k] = original + eps
            upper = f(flat_point.reshape(point.shape)).item()
            flat_point[k] = original - eps
            lower = f(flat_point.reshape(point.shape)).item()
            flat_point[k] = original
            flat_numeric[k] = (upper - lower) / (2.0 * eps)
    return _relative_error(analytic.detach(), numeric, eps)


def parameter_gradient_check(
    loss_fn: Callable[[], DTensor], module: nn.Module, eps: float = 1e-6
) -> float:
    """Finite-difference check over every trainable parameter of ``module``."""
    parameters = [p for p in module.parameters() if p.requires_grad]
    loss = loss_fn()
    grads = torch.autograd.grad(loss, parameters, allow_unused=True)

    worst = 0.0
    with torch.no_grad():
        for param, grad in zip(parameters, grads):
            analytic = torch.zeros_like(param) if grad is None else grad.detach()
            numeric = torch.zeros_like(param)
            flat_param = param.view(-1)
            flat_numeric = numeric.view(-1)
            for k in range(flat_param.numel()):
                original = flat_param[k].item()
                flat_param[k] = original + eps
                upper = loss_fn().item()
                flat_param[k] = original - eps
                lower = loss_fn().item()
                flat_param[k] = original
                flat_numeric[k] = (upper - lower) / (2.0 * eps)
            worst = max(worst, _relative_error(analytic, numeric, eps))
    return worst
