"""Two-layer perceptrons, RMS normalization and gated feed-forward layers."""

import math
from enum import Enum
from typing import Optional, Union

import torch
from torch import nn

from meshrollout.autodiff import ops

from .exceptions import FeatureWidthError


class Activation(str, Enum):
    """Nonlinearity between the two layers of an :class:`MLP`."""

    SILU = "silu"
    GELU = "gelu"
    RELU = "relu"
    IDENTITY = "identity"


def _activation(kind: Activation) -> nn.Module:
    return {
        Activation.SILU: nn.SiLU(),
        Activation.GELU: nn.GELU(),
        Activation.RELU: nn.ReLU(),
        Activation.IDENTITY: nn.Identity(),
    }[kind]


def he_uniform_(linear: nn.Linear) -> nn.Linear:
    """Weights from ``U(-sqrt(6 / fan_in), sqrt(6 / fan_in))``, biases zero."""
    bound = math.sqrt(6.0 / linear.in_features)
    with torch.no_grad():
        linear.weight.uniform_(-bound, bound)
        if linear.bias is not None:
            linear.bias.zero_()
    return linear


def zero_(linear: nn.Linear) -> nn.Linear:
    with torch.no_grad():
        linear.weight.zero_()
        if linear.bias is not None:
            linear.bias.zero_()
    return linear


def check_width(layer: str, x: torch.Tensor, expected: int) -> None:
    if x.shape[-1] != expected:
        raise FeatureWidthError(layer, expected, int(x.shape[-1]))


class MLP(nn.Module):
    """``Linear -> activation -> Linear`` with He-uniform initialization."""

    def __init__(
        self,
        in_features: int,
        hidden_features: int,
        out_features: int,
        activation: Union[Activation, str] = Activation.SILU,
        zero_last: bool = False,
    ):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.input_layer = he_uniform_(nn.Linear(in_features, hidden_features))
        self.activation = _activation(Activation(activation))
        self.output_layer = nn.Linear(hidden_features, out_features)
        if zero_last:
            zero_(self.output_layer)
        else:
            he_uniform_(self.output_layer)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        check_width("mlp", x, self.in_features)
        return self.output_layer(self.activation(self.input_layer(x)))


def build_encoder(
    in_features: int, width: int, activation: Union[Activation, str] = Activation.SILU
) -> MLP:
    """Encoder ``R^p -> R^d``."""
    return MLP(in_features, width, width, activation)


def build_decoder(
    width: int, out_features: int, activation: Union[Activation, str] = Activation.SILU
) -> MLP:
    """Decoder ``R^d -> R^c`` whose last layer starts at zero.

    A zero decoder makes an untrained increment model the identity map.
    """
    return MLP(width, width, out_features, activation, zero_last=True)


class RMSNorm(nn.Module):
    """``x / rms(x) * scale`` over the last axis."""

    def __init__(self, width: int, eps: float = 1e-6):
        super().__init__()
        self.width = width
        self.eps = eps
        self.scale = nn.Parameter(torch.ones(width))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        check_width("rms_norm", x, self.width)
        mean_square = ops.reduce_mean(ops.mul(x, x), axis=-1, keepdim=True)
        inverse_rms = ops.rsqrt(ops.add(mean_square, self.eps)).expand_as(x)
        normalized = ops.mul(x, inverse_rms)
        return ops.mul(normalized, self.scale)


class GatedMLP(nn.Module):
    """``W_o (silu(W_g z) * W_v z)`` without biases."""

    def __init__(self, width: int, hidden: Optional[int] = None):
        super().__init__()
        hidden = hidden or 2 * width
        self.width = width
        self.gate = he_uniform_(nn.Linear(width, hidden, bias=False))
        self.value = he_uniform_(nn.Linear(width, hidden, bias=False))
        self.output = he_uniform_(nn.Linear(hidden, width, bias=False))

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        check_width("gated_mlp", z, self.width)
        return self.output(ops.mul(ops.silu(self.gate(z)), self.value(z)))


def count_parameters(module: nn.Module) -> int:
    """Number of trainable scalars in ``module``."""
    return sum(p.numel() for p in module.parameters() if p.requires_grad)
