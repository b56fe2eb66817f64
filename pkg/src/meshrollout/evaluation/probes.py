"""Latent-representation probes: distance to the encoded target and subtask regressions."""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import structlog
import torch

from meshrollout.data import FieldKind, Trajectory, build_node_features
from meshrollout.layers import MLP
from meshrollout.surrogate import MeshSurrogate, PreparedGraph
from meshrollout.theory import WlsOperator

logger = structlog.get_logger(__name__)


def _inputs(model: MeshSurrogate, traj: Trajectory, t: int, dtype: torch.dtype):
    config = model.config
    features = build_node_features(
        traj, t, config.include_history, config.include_positions
    )
    return torch.as_tensor(features.values, dtype=dtype)


def collect_latents(
    model: MeshSurrogate,
    traj: Trajectory,
    graph: PreparedGraph,
    t: int,
    dtype: torch.dtype = torch.float32,
) -> list[np.ndarray]:
    """``L + 1`` arrays ``N x d``: the encoder output then every block's output."""
    with torch.no_grad():
        output = model(_inputs(model, traj, t, dtype), graph, keep_latents=True)
    return [z.double().numpy() for z in output.latents]


def latent_distance_probe(
    model: MeshSurrogate,
    traj: Trajectory,
    graph: PreparedGraph,
    steps: Optional[Sequence[int]] = None,
    dtype: torch.dtype = torch.float32,
) -> list[float]:
    """Per-layer mean node L2 distance between ``Z^l(x_t)`` and ``E(x_{t+1})``.

    Averaged over ``steps`` (every step with a successor by default).
    """
    first = 1 if model.config.include_history else 0
    steps = list(range(first, traj.num_steps - 1)) if steps is None else list(steps)
    totals = np.zeros(model.config.depth + 1)
    with torch.no_grad():
        for t in steps:
            latents = collect_latents(model, traj, graph, t, dtype)
            target = model.encode(_inputs(model, traj, t + 1, dtype), graph)
            target = target.double().numpy()
            totals += [np.linalg.norm(z - target, axis=1).mean() for z in latents]
    return (totals / max(len(steps), 1)).tolist()


@dataclass
class ProbeConfig:
    """Training of the two-layer regression probes."""

    hidden: int = 32
    epochs: int = 300
    lr: float = 1e-2
    holdout: float = 0.25
    seed: int = 0

    def validate(self) -> None:
        if self.hidden < 1 or self.epochs < 0 or self.lr <= 0:
            raise ValueError("probe hidden width, epochs and lr must be positive")
        if not 0.0 < self.holdout < 1.0:
            raise ValueError(f"holdout must lie in (0, 1), got {self.holdout}")


@dataclass
class ProbeReport:
    """Held-out loss per task, indexed by layer (0 is the encoder output)."""

    losses: dict[str, list[float]] = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [
            {"task": task, "layer": layer, "loss": loss}
            for task, series in self.losses.items()
            for layer, loss in enumerate(series)
        ]


def probe_targets(traj: Trajectory, t: int) -> dict[str, np.ndarray]:
    """Velocity, the scalar field (pressure proxy) and its WLS gradient magnitude."""
    state = traj.states[t].astype(np.float64)
    velocity = traj.schema.indices_of(FieldKind.VELOCITY)
    scalar = traj.schema.indices_of(FieldKind.SCALAR)
    targets = {}
    if velocity.size:
        targets["velocity"] = state[:, velocity]
    if scalar.size:
        field_values = state[:, scalar[0]]
        gradient = WlsOperator(traj.mesh).gradient(field_values)
        targets["pressure_proxy"] = field_values[:, None]
        targets["gradient_magnitude"] = np.linalg.norm(gradient, axis=1, keepdims=True)
    return targets


def _fit_probe(
    inputs: np.ndarray, targets: np.ndarray, cfg: ProbeConfig, seed: int
) -> float:
    # One split for every layer and task; only the initialization varies.
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(inputs.shape[0])
    cut = int(round(inputs.shape[0] * (1.0 - cfg.holdout)))
    train, test = order[:cut], order[cut:]
    x = torch.as_tensor(inputs, dtype=torch.float64)
    y = torch.as_tensor(targets, dtype=torch.float64)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        probe = MLP(x.shape[1], cfg.hidden, y.shape[1]).double()
    optimizer = torch.optim.Adam(probe.parameters(), lr=cfg.lr)
    for _ in range(cfg.epochs):
        optimizer.zero_grad()
        loss = torch.mean((probe(x[train]) - y[train]) ** 2)
        loss.backward()
        optimizer.step()
    with torch.no_grad():
        return float(torch.mean((probe(x[test]) - y[test]) ** 2))


def subtask_probe(
    latents: Sequence[np.ndarray],
    targets: Mapping[str, np.ndarray],
    cfg: Optional[ProbeConfig] = None,
) -> ProbeReport:
    """Fit a fresh two-layer MLP per (layer, task) on frozen latents.

    ``latents[l]`` and every target array share their row order. The
    reported loss is the mean squared error on a held-out row subset.
    """
    cfg = cfg or ProbeConfig()
    cfg.validate()
    report = ProbeReport()
    for k, (task, values) in enumerate(sorted(targets.items())):
        values = np.asarray(values, dtype=np.float64).reshape(values.shape[0], -1)
        report.losses[task] = [
            _fit_probe(z, values, cfg, seed=cfg.seed + 1000 * k + layer)
            for layer, z in enumerate(latents)
        ]
    logger.info(
        "Subtask probes complete", tasks=list(report.losses), layers=len(latents)
    )
    return report
