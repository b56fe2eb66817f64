"""Shape-checked tensor primitives.

Every layer is written against these functions instead of raw torch
operators. Broadcasting is limited to scalar-with-tensor and trailing-axis
alignment (the smaller shape must equal the tail of the larger one); any
other combination raises :class:`ShapeMismatchError` naming the primitive.
Gradients are recorded by torch autograd.
"""

from collections.abc import Sequence
from typing import Union

import torch
import torch.nn.functional as F

from .exceptions import EmptyAttentionRowError, ShapeMismatchError

Operand = Union[torch.Tensor, float, int]


def _shape(x: Operand) -> tuple[int, ...]:
    return tuple(x.shape) if isinstance(x, torch.Tensor) else ()


def _is_suffix(small: tuple[int, ...], large: tuple[int, ...]) -> bool:
    return len(small) <= len(large) and large[len(large) - len(small) :] == small


def check_broadcast(op: str, a: Operand, b: Operand) -> None:
    """Validate the restricted broadcasting rule for a binary primitive."""
    sa, sb = _shape(a), _shape(b)
    if sa == sb or not sa or not sb:
        return
    if _is_suffix(sa, sb) or _is_suffix(sb, sa):
        return
    raise ShapeMismatchError(op, [sa, sb])


def add(a: Operand, b: Operand) -> torch.Tensor:
    check_broadcast("add", a, b)
    return a + b


def sub(a: Operand, b: Operand) -> torch.Tensor:
    check_broadcast("sub", a, b)
    return a - b


def mul(a: Operand, b: Operand) -> torch.Tensor:
    check_broadcast("mul", a, b)
    return a * b


def div(a: Operand, b: Operand) -> torch.Tensor:
    check_broadcast("div", a, b)
    return a / b


def matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Matrix product; batch axes must match exactly unless ``b`` is 2-D."""
    if a.dim() < 2 or b.dim() < 2:
        raise ShapeMismatchError("matmul", [a.shape, b.shape], "operands must be >= 2-D")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError("matmul", [a.shape, b.shape], "inner dimensions differ")
    if b.dim() > 2 and a.shape[:-2] != b.shape[:-2]:
        raise ShapeMismatchError("matmul", [a.shape, b.shape], "batch dimensions differ")
    return torch.matmul(a, b)


def transpose(x: torch.Tensor, dim0: int = -2, dim1: int = -1) -> torch.Tensor:
    if x.dim() < 2:
        raise ShapeMismatchError("transpose", [x.shape], "needs at least 2 axes")
    return x.transpose(dim0, dim1)


def concat(tensors: Sequence[torch.Tensor], axis: int = -1) -> torch.Tensor:
    """Concatenate along ``axis``; all other axes must agree."""
    if not tensors:
        raise ShapeMismatchError("concat", [], "no operands")
    reference = list(tensors[0].shape)
    ndim = len(reference)
    axis = axis % ndim if ndim else 0
    for t in tensors[1:]:
        shape = list(t.shape)
        if len(shape) != ndim or any(
            shape[k] != reference[k] for k in range(ndim) if k != axis
        ):
            raise ShapeMismatchError("concat", [t.shape for t in tensors])
    return torch.cat(list(tensors), dim=axis)


def gather(x: torch.Tensor, index: torch.Tensor, axis: int = 0) -> torch.Tensor:
    """Select rows (or slices along ``axis``) by an integer index vector."""
    if index.dim() != 1:
        raise ShapeMismatchError("gather", [x.shape, index.shape], "index must be 1-D")
    size = x.shape[axis]
    if index.numel() and (int(index.min()) < 0 or int(index.max()) >= size):
        raise ShapeMismatchError(
            "gather", [x.shape, index.shape], f"index out of range for size {size}"
        )
    return torch.index_select(x, axis, index)


def slice_axis(x: torch.Tensor, start: int, stop: int, axis: int = -1) -> torch.Tensor:
    size = x.shape[axis]
    if not 0 <= start <= stop <= size:
        raise ShapeMismatchError(
            "slice", [x.shape], f"range [{start}, {stop}) outside axis of size {size}"
        )
    return x.narrow(axis, start, stop - start)


def reduce_sum(x: torch.Tensor, axis=None, keepdim: bool = False) -> torch.Tensor:
    if axis is None:
        return x.sum()
    return x.sum(dim=axis, keepdim=keepdim)


def reduce_mean(x: torch.Tensor, axis=None, keepdim: bool = False) -> torch.Tensor:
    if axis is None:
        return x.mean()
    return x.mean(dim=axis, keepdim=keepdim)


def exp(x: torch.Tensor) -> torch.Tensor:
    return torch.exp(x)


def tanh(x: torch.Tensor) -> torch.Tensor:
    return torch.tanh(x)


def silu(x: torch.Tensor) -> torch.Tensor:
    return F.silu(x)


def rsqrt(x: torch.Tensor) -> torch.Tensor:
    return torch.rsqrt(x)


def softmax(x: torch.Tensor, axis: int = -1) -> torch.Tensor:
    return torch.softmax(x, dim=axis)


def masked_fill(x: torch.Tensor, mask: torch.Tensor, value: float) -> torch.Tensor:
    """Replace entries where ``mask`` is True by ``value``."""
    if mask.dtype != torch.bool:
        raise ShapeMismatchError("masked_fill", [x.shape, mask.shape], "mask must be bool")
    if not (
        tuple(mask.shape) == tuple(x.shape) or _is_suffix(tuple(mask.shape), tuple(x.shape))
    ):
        raise ShapeMismatchError("masked_fill", [x.shape, mask.shape])
    return x.masked_fill(mask, value)


def masked_softmax(logits: torch.Tensor, admitted: torch.Tensor) -> torch.Tensor:
    """Softmax over the last axis restricted to ``admitted`` entries.

    Excluded entries are filled with ``-inf`` so they receive exactly zero
    weight. A row with no admitted entry is an error.
    """
    empty = ~admitted.any(dim=-1)
    if bool(empty.any()):
        rows = torch.nonzero(empty.reshape(-1)).reshape(-1).tolist()
        raise EmptyAttentionRowError(rows)
    return softmax(masked_fill(logits, ~admitted, float("-inf")), axis=-1)


def padded_softmax(logits: torch.Tensor, admitted: torch.Tensor) -> torch.Tensor:
    """Masked softmax that returns all-zero weights for empty rows.

    Used for padded token sequences, where padded queries have nothing to
    attend to. A large finite fill keeps gradients free of NaN.
    """
    fill = torch.finfo(logits.dtype).min
    weights = softmax(masked_fill(logits, ~admitted, fill), axis=-1)
    weights = masked_fill(weights, ~admitted, 0.0)
    return weights
