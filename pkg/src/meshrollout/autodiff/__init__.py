"""Differentiable core: precision, shape-checked primitives and gradient checks.

Gradients are recorded by torch autograd; this package adds the precision
toggle, the restricted-broadcasting primitives every layer uses, a guarded
backward pass and the finite-difference verification harness.
"""

from . import ops
from .exceptions import (
    AutodiffError,
    EmptyAttentionRowError,
    EmptyTapeError,
    NonScalarLossError,
    ShapeMismatchError,
    TapeConsumedError,
)
from .gradcheck import finite_difference_check, parameter_gradient_check
from .precision import (
    DTensor,
    Precision,
    configure_runtime,
    precision_scope,
    resolve_dtype,
    seed_everything,
    tensor,
)
from .tape import Tape, backward

__all__ = [
    # Tensors and precision
    "DTensor",
    "Precision",
    "tensor",
    "resolve_dtype",
    "precision_scope",
    "seed_everything",
    "configure_runtime",
    # Primitives
    "ops",
    # Gradients
    "Tape",
    "backward",
    "finite_difference_check",
    "parameter_gradient_check",
    # Exceptions
    "AutodiffError",
    "ShapeMismatchError",
    "NonScalarLossError",
    "EmptyTapeError",
    "TapeConsumedError",
    "EmptyAttentionRowError",
]
