"""Next-step training loop with multi-node, auxiliary and intermediate losses."""

import csv
import threading
import time
from collections.abc import Iterator, Sequence
from contextlib import closing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import structlog
import torch
from opentelemetry import trace

from meshrollout.autodiff import ops, resolve_dtype, seed_everything
from meshrollout.data import FieldKind, Trajectory, feature_width
from meshrollout.evaluation import enforced_entries, latent_distance_probe
from meshrollout.hashing import content_hash
from meshrollout.metrics import operation_timer
from meshrollout.mnp import CenterSampler, combine_losses
from meshrollout.surrogate import (
    MeshSurrogate,
    ModelConfig,
    PreparedGraph,
    prepare_graph,
)
from meshrollout.theory import WlsOperator

from .checkpoint import (
    checkpoint_path,
    latest_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .config import TrainConfig
from .exceptions import IncompatibleLossError, NonFiniteGradientError
from .losses import (
    cosine_similarity_loss,
    divergence_residual,
    enforced_mask,
    grad_supervision,
    main_loss,
)
from .optim import build_optimizer, check_finite_gradients, lr_at, set_learning_rate
from .samples import (
    Prefetcher,
    Sample,
    epoch_order,
    make_sample,
    prefetch,
    sample_pairs,
)

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

# Model initialization draws from the process-wide torch generator.
_INIT_LOCK = threading.Lock()

LOG_FILE = "train_log.csv"
LATENT_FILE = "latent_distance.csv"
LOSS_COLUMNS = (
    "loss_main",
    "loss_mnp",
    "loss_grad",
    "loss_div",
    "loss_cos",
    "loss_intermediate",
    "loss_total",
)


def run_hash(model_config: ModelConfig, train_config: TrainConfig, seed: int) -> str:
    """Content hash identifying one (model, training, seed) run."""
    return content_hash(
        {
            "model": model_config.model_dump(mode="json"),
            "train": train_config.model_dump(mode="json"),
            "seed": seed,
        }
    )


def _check_divergence_fields(trajectories: Sequence[Trajectory]) -> None:
    """The divergence term needs one velocity component per spatial axis."""
    for traj in trajectories:
        count = len(traj.schema.indices_of(FieldKind.VELOCITY))
        if count != traj.mesh.dim:
            raise IncompatibleLossError(
                "divergence",
                f"{count} velocity components on a {traj.mesh.dim}D mesh",
            )


@dataclass
class TrainResult:
    """Trained model and the per-step log of one run."""

    model: MeshSurrogate
    graphs: list[PreparedGraph]
    history: list[dict] = field(default_factory=list)
    latent_distances: list[dict] = field(default_factory=list)
    steps: int = 0
    checkpoint: Optional[Path] = None


class Trainer:
    """Trains one :class:`MeshSurrogate` for one seed.

    Each optimizer step consumes ``accumulation`` (trajectory, t) pairs in
    the epoch order fixed by the seed. Inputs carry noise, targets never do.
    """

    def __init__(
        self,
        model_config: ModelConfig,
        train_config: TrainConfig,
        trajectories: Sequence[Trajectory],
        seed: int = 0,
        run_dir: Optional[Union[str, Path]] = None,
        dtype: Optional[torch.dtype] = None,
    ):
        if not trajectories:
            raise ValueError("training needs at least one trajectory")
        if train_config.aux.divergence:
            _check_divergence_fields(trajectories)
        self.model_config = model_config
        self.train_config = train_config
        self.trajectories = list(trajectories)
        self.seed = seed
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.dtype = dtype or resolve_dtype()
        self.config_hash = run_hash(model_config, train_config, seed)
        self.noise = train_config.noise_spec()

        first = self.trajectories[0]
        in_features = feature_width(
            first.schema,
            first.mesh.dim,
            model_config.include_history,
            model_config.include_positions,
        )
        with _INIT_LOCK:
            seed_everything(seed)
            self.model = MeshSurrogate(
                model_config, in_features, first.num_components, dim=first.mesh.dim
            ).to(self.dtype)
        self.optimizer = build_optimizer(self.model, train_config)

        self.graphs = [
            prepare_graph(traj.mesh, model_config, seed=seed, dtype=self.dtype)
            for traj in self.trajectories
        ]
        aux = train_config.aux
        self.operators = (
            [WlsOperator(traj.mesh) for traj in self.trajectories]
            if aux.grad_supervision or aux.divergence
            else None
        )
        mnp = model_config.mnp
        self.samplers = (
            [
                CenterSampler(traj.mesh, mnp.centers, seed, mnp.bias)
                for traj in self.trajectories
            ]
            if mnp.enabled
            else None
        )
        self.masks = (
            [
                enforced_entries(traj.mesh.node_type, traj.schema)
                for traj in self.trajectories
            ]
            if train_config.exclude_enforced_from_loss
            else None
        )

        self.pairs = sample_pairs(self.trajectories, model_config.include_history)
        self.total_steps = self._total_steps()
        self.step = 0
        self.history: list[dict] = []
        self.latent_distances: list[dict] = []
        logger.info(
            "Trainer ready",
            seed=seed,
            parameters=self.model.num_parameters,
            pairs=len(self.pairs),
            total_steps=self.total_steps,
            config_hash=self.config_hash,
        )

    def _total_steps(self) -> int:
        cfg = self.train_config
        per_epoch = -(-len(self.pairs) // cfg.accumulation)
        total = per_epoch * cfg.epochs
        return total if cfg.max_steps is None else min(total, cfg.max_steps)

    def _samples(self, skip: int) -> Iterator[Sample]:
        """Training samples in order, starting after the first ``skip``."""
        cfg, config = self.train_config, self.model_config
        index = 0
        for epoch in range(cfg.epochs):
            for pair in epoch_order(self.pairs, self.seed, epoch):
                if index >= skip:
                    yield make_sample(
                        self.trajectories,
                        pair,
                        self.noise,
                        self.seed,
                        index,
                        config.include_history,
                        config.include_positions,
                        self.dtype,
                    )
                index += 1

    def sample_loss(self, sample: Sample, step: int) -> dict[str, torch.Tensor]:
        """Every loss term of one sample; ``loss_total`` is what gets differentiated."""
        k = sample.trajectory
        graph = self.graphs[k]
        output = self.model(sample.features, graph)
        target = sample.target_increment
        mask = None
        if self.masks is not None:
            mask = enforced_mask(self.masks[k], target)

        terms = {"loss_main": main_loss(output.increment, target, mask)}
        zero = terms["loss_main"].new_zeros(())
        total = terms["loss_main"]

        terms["loss_mnp"] = zero
        if self.samplers is not None:
            centers = self.samplers[k].sample(step)
            terms["loss_mnp"] = self.model.mnp_loss(output, graph, centers, target)
            alpha = self.model_config.mnp.alpha
            total = combine_losses(total, terms["loss_mnp"], alpha)

        aux = self.train_config.aux
        predicted = ops.add(sample.state, output.increment)
        terms["loss_grad"] = terms["loss_div"] = terms["loss_cos"] = zero
        if aux.grad_supervision:
            terms["loss_grad"] = grad_supervision(
                predicted, sample.target, self.operators[k]
            )
            total = ops.add(total, ops.mul(terms["loss_grad"], aux.grad_weight))
        if aux.divergence:
            schema = self.trajectories[k].schema
            velocity = torch.as_tensor(schema.indices_of(FieldKind.VELOCITY))
            terms["loss_div"] = divergence_residual(
                predicted[:, velocity], self.operators[k]
            )
            weighted = ops.mul(terms["loss_div"], aux.divergence_weight)
            total = ops.add(total, weighted)
        if aux.cosine_sim:
            terms["loss_cos"] = cosine_similarity_loss(predicted, sample.target)
            total = ops.add(total, ops.mul(terms["loss_cos"], aux.cosine_weight))

        terms["loss_intermediate"] = zero
        if output.intermediate:
            partial = [main_loss(inc, target, mask) for inc in output.intermediate]
            terms["loss_intermediate"] = ops.div(
                torch.stack(partial).sum(), float(len(partial))
            )
            total = ops.add(total, terms["loss_intermediate"])

        terms["loss_total"] = total
        return terms

    def train_step(self, samples: Sequence[Sample]) -> dict[str, float]:
        """One optimizer step over ``samples`` (gradients averaged)."""
        self.model.train()
        self.optimizer.zero_grad(set_to_none=True)
        sums = dict.fromkeys(LOSS_COLUMNS, 0.0)
        for sample in samples:
            terms = self.sample_loss(sample, self.step)
            ops.div(terms["loss_total"], float(len(samples))).backward()
            for name in LOSS_COLUMNS:
                sums[name] += float(terms[name].detach()) / len(samples)

        try:
            check_finite_gradients(self.model.named_parameters(), self.step)
        except NonFiniteGradientError as e:
            logger.error(
                "Non-finite gradient, aborting",
                step=e.step,
                parameters=e.parameters,
                losses=sums,
            )
            raise

        self.step += 1
        lr = lr_at(self.step, self.train_config, self.total_steps)
        set_learning_rate(self.optimizer, lr)
        self.optimizer.step()
        return {"step": self.step, "lr": lr, **sums}

    def _batches(self, skip: int) -> Iterator[list[Sample]]:
        batch: list[Sample] = []
        source = prefetch(self._samples(skip), self.train_config.prefetch)
        try:
            for sample in source:
                batch.append(sample)
                if len(batch) == self.train_config.accumulation:
                    yield batch
                    batch = []
            if batch:
                yield batch
        finally:
            if isinstance(source, Prefetcher):
                source.close()
                batch = []
        if batch:
            yield batch

    def _probe_latents(self) -> None:
        distances = latent_distance_probe(
            self.model, self.trajectories[0], self.graphs[0], dtype=self.dtype
        )
        row = {"step": self.step}
        row.update({f"layer_{k}": d for k, d in enumerate(distances)})
        self.latent_distances.append(row)
        logger.info("Latent distances", step=self.step, last=distances[-1])

    def _checkpoint(self) -> Optional[Path]:
        if self.train_config.latent_probe:
            self._probe_latents()
        if self.run_dir is None:
            return None
        path = save_checkpoint(
            checkpoint_path(self.run_dir, self.step),
            self.model,
            self.optimizer,
            self.step,
            self.config_hash,
            extra={"history": self.history, "latent_distances": self.latent_distances},
        )
        self._write_logs()
        return path

    def _write_logs(self) -> None:
        _write_rows(
            self.run_dir / LOG_FILE,
            ["step", "lr", *LOSS_COLUMNS, "wall_time"],
            self.history,
        )
        if self.latent_distances:
            columns = ["step"] + [
                f"layer_{k}" for k in range(self.model_config.depth + 1)
            ]
            _write_rows(self.run_dir / LATENT_FILE, columns, self.latent_distances)

    def resume(self) -> bool:
        """Restore the latest checkpoint under ``run_dir``; False when none exists."""
        if self.run_dir is None:
            return False
        path = latest_checkpoint(self.run_dir)
        if path is None:
            return False
        payload = load_checkpoint(path, self.model, self.optimizer, self.config_hash)
        self.step = int(payload["step"])
        self.history = list(payload["extra"].get("history", []))
        self.latent_distances = list(payload["extra"].get("latent_distances", []))
        logger.info("Resumed training", step=self.step, path=str(path))
        return True

    @tracer.start_as_current_span("training.fit")
    @operation_timer("train")
    def fit(self, resume: bool = False) -> TrainResult:
        """Train to ``total_steps``, checkpointing along the way."""
        last, saved_at = None, None
        if resume and self.resume():
            saved_at = self.step
            last = checkpoint_path(self.run_dir, self.step)
        cfg = self.train_config
        skip = self.step * cfg.accumulation
        start = time.perf_counter()
        with closing(self._batches(skip)) as batches:
            for batch in batches:
                if self.step >= self.total_steps:
                    break
                row = self.train_step(batch)
                row["wall_time"] = time.perf_counter() - start
                self.history.append(row)
                if self.step % cfg.log_every == 0:
                    logger.info(
                        "Training step complete",
                        step=self.step,
                        lr=row["lr"],
                        loss_main=row["loss_main"],
                        loss_mnp=row["loss_mnp"],
                    )
                if cfg.checkpoint_every and self.step % cfg.checkpoint_every == 0:
                    last, saved_at = self._checkpoint(), self.step
        if saved_at != self.step:
            last = self._checkpoint()
        self.model.eval()
        logger.info(
            "Training finished",
            seed=self.seed,
            steps=self.step,
            final_loss=self.history[-1]["loss_total"] if self.history else None,
        )
        return TrainResult(
            model=self.model,
            graphs=self.graphs,
            history=self.history,
            latent_distances=self.latent_distances,
            steps=self.step,
            checkpoint=last,
        )


def _format(value):
    return f"{value:.9e}" if isinstance(value, float) else value


def _write_rows(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _format(row[key]) for key in columns})


def train_model(
    model_config: ModelConfig,
    train_config: TrainConfig,
    trajectories: Sequence[Trajectory],
    seed: int = 0,
    run_dir: Optional[Union[str, Path]] = None,
    resume: bool = False,
    dtype: Optional[torch.dtype] = None,
) -> TrainResult:
    """Build a :class:`Trainer` and run it."""
    trainer = Trainer(model_config, train_config, trajectories, seed, run_dir, dtype)
    return trainer.fit(resume=resume)


def final_latent_trend(rows: Sequence[dict]) -> Optional[float]:
    """Change of the last-layer latent distance from the first to the last probe."""
    if len(rows) < 2:
        return None
    layers = [int(key.split("_")[1]) for key in rows[0] if key.startswith("layer_")]
    key = f"layer_{max(layers)}"
    return float(rows[-1][key]) - float(rows[0][key])
