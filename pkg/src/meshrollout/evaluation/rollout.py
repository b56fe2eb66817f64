"""Autoregressive rollouts behind interchangeable steppers."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import structlog
import torch
from opentelemetry import trace

from meshrollout.data import Trajectory, assemble_features
from meshrollout.surrogate import MeshSurrogate, PreparedGraph

from .boundary import enforce_bc

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

DIVERGENCE_FACTOR = 1e6


class Stepper(ABC):
    """Maps the state at step ``t`` (and the one before) to step ``t + 1``."""

    keeps_latents = False
    # Ground-truth states consumed before the first prediction.
    history_steps = 0

    @abstractmethod
    def step(
        self, state: np.ndarray, previous: Optional[np.ndarray], t: int
    ) -> np.ndarray:
        """Raw next state before boundary enforcement."""

    def latents(self) -> list[np.ndarray]:
        return []


class PersistenceStepper(Stepper):
    """``u_{t+1} = u_t``."""

    def step(self, state, previous, t):
        return state.copy()


class OracleStepper(Stepper):
    """Reads the ground-truth next state."""

    def __init__(self, trajectory: Trajectory):
        self.trajectory = trajectory

    def step(self, state, previous, t):
        return self.trajectory.states[t + 1].astype(np.float64)


class ModelStepper(Stepper):
    """Feeds the surrogate its own outputs, without noise."""

    def __init__(
        self,
        model: MeshSurrogate,
        graph: PreparedGraph,
        trajectory: Trajectory,
        dtype: torch.dtype = torch.float32,
        keep_latents: bool = False,
    ):
        self.model = model
        self.graph = graph
        self.trajectory = trajectory
        self.dtype = dtype
        self.keeps_latents = keep_latents
        self.history_steps = 1 if model.config.include_history else 0
        self._latents: list[np.ndarray] = []

    def step(self, state, previous, t):
        config = self.model.config
        if config.include_history and previous is None:
            raise ValueError(f"step {t} has no previous state for the history feature")
        features = assemble_features(
            self.trajectory.mesh,
            self.trajectory.schema,
            state,
            self.trajectory.delta_t,
            previous_state=previous if config.include_history else None,
            include_positions=config.include_positions,
        )
        inputs = torch.as_tensor(features.values, dtype=self.dtype)
        with torch.no_grad():
            output = self.model(inputs, self.graph, keep_latents=self.keeps_latents)
        if self.keeps_latents:
            self._latents = [z.double().numpy() for z in output.latents]
        return state + output.increment.double().numpy()

    def latents(self) -> list[np.ndarray]:
        return self._latents


@dataclass
class RolloutResult:
    """Predicted states ``0..h`` next to the ground truth.

    ``predicted[:start + 1]`` are true states (``start`` is 1 for models fed
    the history feature), and ``step_mse`` covers steps ``start + 1..h``.
    When the rollout diverges at step ``s`` the states stop at ``s - 1`` and
    ``diverged_at = s``.
    """

    predicted: np.ndarray
    truth: np.ndarray
    step_mse: list[float] = field(default_factory=list)
    diverged_at: Optional[int] = None
    start: int = 0
    latents: list[list[np.ndarray]] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return int(self.predicted.shape[0]) - 1

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    @property
    def step_rmse(self) -> list[float]:
        return [float(np.sqrt(m)) for m in self.step_mse]


def _has_diverged(state: np.ndarray, limit: float) -> bool:
    return bool(not np.all(np.isfinite(state)) or np.abs(state).max() > limit)


def _advance(
    result: RolloutResult, stepper: Stepper, trajectory: Trajectory, horizon: int
) -> RolloutResult:
    schema, node_type = trajectory.schema, trajectory.mesh.node_type
    states = [s for s in result.predicted]
    initial_max = float(np.abs(trajectory.states[0]).max())
    limit = DIVERGENCE_FACTOR * max(initial_max, 1e-12)
    for t in range(result.horizon, horizon):
        previous = states[t - 1] if t > 0 else None
        raw = stepper.step(states[t], previous, t)
        if _has_diverged(raw, limit):
            result.diverged_at = t + 1
            logger.warning("Rollout diverged", step=t + 1, limit=limit)
            break
        truth = trajectory.states[t + 1].astype(np.float64)
        state = enforce_bc(raw, truth, node_type, schema)
        states.append(state)
        result.step_mse.append(float(np.mean((state - truth) ** 2)))
        if stepper.keeps_latents:
            result.latents.append(stepper.latents())
    result.predicted = np.stack(states)
    result.truth = trajectory.states[: result.predicted.shape[0]].astype(np.float64)
    return result


@tracer.start_as_current_span("evaluation.rollout")
def rollout(
    stepper: Stepper, trajectory: Trajectory, horizon: Optional[int] = None
) -> RolloutResult:
    """Roll ``stepper`` forward from the true initial states for ``horizon`` steps.

    Steppers that need history start from the true ``u_0`` and ``u_1``.
    Each raw prediction is boundary-enforced before it becomes the next
    input. A NaN/Inf state or one exceeding ``1e6`` times the initial
    maximum aborts the rollout.
    """
    last = trajectory.num_steps - 1
    horizon = last if horizon is None else horizon
    start = stepper.history_steps
    if not start <= horizon <= last:
        raise ValueError(f"horizon {horizon} outside [{start}, {last}]")
    initial = trajectory.states[: start + 1].astype(np.float64)
    result = RolloutResult(predicted=initial, truth=initial.copy(), start=start)
    return _advance(result, stepper, trajectory, horizon)


def continue_rollout(
    result: RolloutResult, stepper: Stepper, trajectory: Trajectory, horizon: int
) -> RolloutResult:
    """Extend ``result`` to ``horizon``; same states as a direct rollout."""
    if result.diverged:
        return result
    if not result.horizon <= horizon <= trajectory.num_steps - 1:
        raise ValueError(
            f"cannot continue from {result.horizon} to {horizon} "
            f"on {trajectory.num_steps} steps"
        )
    return _advance(result, stepper, trajectory, horizon)
