"""Guarded reverse-mode pass over torch's recorded operation graph."""

from collections.abc import Iterable
from typing import Optional

import torch

from .exceptions import EmptyTapeError, NonScalarLossError, TapeConsumedError
from .precision import DTensor, PrecisionLike, tensor

_SECOND_BACKWARD = "backward through the graph a second time"


def backward(loss: DTensor, leaves: Optional[Iterable[DTensor]] = None) -> None:
    """Run reverse-mode accumulation from a scalar ``loss``.

    Every tensor in ``leaves`` that the loss does not depend on receives a
    zero gradient, so callers can rely on ``leaf.grad`` being populated.
    """
    if loss.numel() != 1:
        raise NonScalarLossError(loss.shape)
    if loss.grad_fn is None:
        raise EmptyTapeError()
    try:
        loss.backward()
    except RuntimeError as e:
        if _SECOND_BACKWARD in str(e):
            raise TapeConsumedError(details=str(e)) from e
        raise
    for leaf in leaves or ():
        if leaf.requires_grad and leaf.grad is None:
            leaf.grad = torch.zeros_like(leaf)


class Tape:
    """One forward/backward cycle with explicit leaf bookkeeping.

    Usage:
        tape = Tape()
        x = tape.leaf([1.0, 2.0, 3.0], precision="f64")
        tape.backward((x * x).sum())  # x.grad == [2, 4, 6]
    """

    def __init__(self) -> None:
        self._leaves: list[DTensor] = []
        self._consumed = False

    @property
    def leaves(self) -> list[DTensor]:
        return list(self._leaves)

    @property
    def consumed(self) -> bool:
        return self._consumed

    def leaf(self, data, precision: PrecisionLike = None) -> DTensor:
        """Create and register a gradient-tracking leaf."""
        value = tensor(data, requires_grad=True, precision=precision)
        self._leaves.append(value)
        return value

    def watch(self, *tensors: DTensor) -> None:
        """Register existing leaves, e.g. module parameters."""
        for value in tensors:
            if not value.requires_grad:
                value.requires_grad_(True)
            self._leaves.append(value)

    def backward(self, loss: DTensor) -> None:
        """Differentiate ``loss`` once; a second call needs :meth:`reset`."""
        if self._consumed:
            raise TapeConsumedError()
        backward(loss, self._leaves)
        self._consumed = True

    def reset(self) -> None:
        """Clear accumulated gradients and allow another backward pass."""
        for value in self._leaves:
            value.grad = None
        self._consumed = False
