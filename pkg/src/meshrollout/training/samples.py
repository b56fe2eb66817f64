"""Next-step training samples, their order and an order-preserving prefetcher."""

import queue
import threading
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from typing import Generic, Optional, TypeVar

import numpy as np
import torch

from meshrollout.data import (
    ColumnRole,
    NoiseSpec,
    Trajectory,
    add_training_noise,
    build_node_features,
)

ORDER_STREAM = 2
NOISE_STREAM = 3

T = TypeVar("T")


@dataclass(eq=False)
class Sample:
    """Inputs and target of one ``(trajectory, t)`` pair.

    ``state`` is the (possibly noisy) input state read back from the field
    columns of ``features``; ``target`` is the clean ``u_{t+1}``.
    """

    trajectory: int
    t: int
    features: torch.Tensor
    state: torch.Tensor
    target: torch.Tensor

    @property
    def target_increment(self) -> torch.Tensor:
        return self.target - self.state


def sample_pairs(
    trajectories: list[Trajectory], include_history: bool
) -> list[tuple[int, int]]:
    """Every ``(trajectory, t)`` with a next state (and a previous one for history)."""
    first = 1 if include_history else 0
    return [
        (k, t)
        for k, traj in enumerate(trajectories)
        for t in range(first, traj.num_steps - 1)
    ]


def epoch_order(
    pairs: list[tuple[int, int]], seed: int, epoch: int
) -> list[tuple[int, int]]:
    """Pairs in a random order fixed by ``(seed, epoch)``."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch, ORDER_STREAM]))
    return [pairs[i] for i in rng.permutation(len(pairs))]


def make_sample(
    trajectories: list[Trajectory],
    pair: tuple[int, int],
    noise: NoiseSpec,
    seed: int,
    step: int,
    include_history: bool,
    include_positions: bool,
    dtype: torch.dtype,
) -> Sample:
    """Build the features of ``u_t`` with training noise and the clean target."""
    k, t = pair
    traj = trajectories[k]
    features = build_node_features(traj, t, include_history, include_positions)
    if noise.sigma:
        stream = np.random.SeedSequence([seed, step, NOISE_STREAM])
        features = add_training_noise(features, noise, stream)
    fields = features.column_indices(ColumnRole.FIELD)
    return Sample(
        trajectory=k,
        t=t,
        features=torch.as_tensor(features.values, dtype=dtype),
        state=torch.as_tensor(features.values[:, fields], dtype=dtype),
        target=torch.as_tensor(traj.states[t + 1], dtype=dtype),
    )


_DONE = object()
_POLL_SECONDS = 0.05


class Prefetcher(Generic[T]):
    """Runs an iterable on a worker thread ``depth`` items ahead.

    Items come out in production order; an exception raised by the source
    is re-raised in the consumer. A consumer that stops early must call
    :meth:`close` (or leave the ``with`` block) so the worker exits.
    """

    def __init__(self, source: Iterable[T], depth: int = 2):
        self._source = source
        self._queue: queue.Queue = queue.Queue(maxsize=max(depth, 1))
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    @property
    def is_alive(self) -> bool:
        return self._thread.is_alive()

    def _put(self, item) -> bool:
        while not self._stop.is_set():
            try:
                self._queue.put(item, timeout=_POLL_SECONDS)
                return True
            except queue.Full:
                continue
        return False

    def _run(self) -> None:
        try:
            for item in self._source:
                if not self._put(item):
                    return
        except BaseException as e:
            self._put(e)
            return
        self._put(_DONE)

    def close(self, timeout: Optional[float] = None) -> None:
        """Stop the worker, drop queued items and wait for the thread."""
        self._stop.set()
        while True:
            try:
                self._queue.get_nowait()
            except queue.Empty:
                break
        if threading.current_thread() is not self._thread:
            self._thread.join(timeout)

    def __enter__(self) -> "Prefetcher[T]":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __iter__(self) -> Iterator[T]:
        try:
            while True:
                item = self._queue.get()
                if item is _DONE:
                    return
                if isinstance(item, BaseException):
                    raise item
                yield item
        finally:
            self.close()


def prefetch(source: Iterable[T], depth: int) -> Iterable[T]:
    """Wrap ``source`` in a :class:`Prefetcher` unless ``depth`` is 0."""
    return Prefetcher(source, depth) if depth > 0 else source
