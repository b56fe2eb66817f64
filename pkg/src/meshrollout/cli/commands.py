"""The generate, train, eval, ablate and verify commands."""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Optional

import numpy as np
import structlog
import torch
from opentelemetry import trace

from meshrollout.autodiff import resolve_dtype
from meshrollout.data import (
    DatasetSplit,
    Trajectory,
    feature_width,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from meshrollout.evaluation import (
    ModelStepper,
    OracleStepper,
    PersistenceStepper,
    ProbeConfig,
    aggregate_seeds,
    collect_latents,
    export_latents,
    probe_targets,
    rmse_1step,
    rmse_rollouts,
    rollout,
    subtask_probe,
)
from meshrollout.metrics import operation_timer
from meshrollout.surrogate import MeshSurrogate, PreparedGraph, prepare_graph
from meshrollout.theory import run_verification_suite, write_tables
from meshrollout.training import Trainer, final_latent_trend

from .ablation import ablation_cells
from .config import ExperimentConfig
from .exceptions import MissingArtifactError
from .manifest import write_csv, write_json, write_manifest

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

DATA_DIR = "data"


def seed_dir(out: Path, seed: int) -> Path:
    return Path(out) / f"seed_{seed}"


def _in_features(config: ExperimentConfig, traj: Trajectory) -> int:
    return feature_width(
        traj.schema,
        traj.mesh.dim,
        config.model.include_history,
        config.model.include_positions,
    )


def dataset_for(
    config: ExperimentConfig, out: Path, threads: int = 1, create: bool = True
) -> DatasetSplit:
    """The split under ``out/data``, generated and saved first when ``create``."""
    directory = Path(out) / DATA_DIR
    if directory.exists():
        return load_dataset(directory)
    if not create:
        raise MissingArtifactError(str(directory), "run 'meshrollout generate' first")
    split = generate_dataset(config.dataset, threads=threads)
    save_dataset(split, directory)
    return split


def evaluate_stepper(
    make_stepper,
    trajectories: list[Trajectory],
    horizon: Optional[int],
) -> dict[str, Any]:
    """Rollouts of one stepper factory over ``trajectories``."""
    indexed = list(enumerate(trajectories))
    results = [rollout(make_stepper(k), traj, horizon) for k, traj in indexed]
    one_step = [rollout(make_stepper(k), traj, 1) for k, traj in indexed]
    return {
        "rmse_1step": rmse_rollouts(one_step),
        "rmse_rollout": rmse_rollouts(results),
        "results": results,
    }


def evaluate_model(
    model: MeshSurrogate,
    config: ExperimentConfig,
    trajectories: list[Trajectory],
    seed: int,
    dtype: torch.dtype,
) -> dict[str, Any]:
    """1-step and all-rollout RMSE of a trained surrogate on ``trajectories``."""
    model.eval()
    graphs = [
        prepare_graph(traj.mesh, config.model, seed=seed, dtype=dtype)
        for traj in trajectories
    ]
    results = [
        rollout(ModelStepper(model, graph, traj, dtype), traj, config.eval.horizon)
        for traj, graph in zip(trajectories, graphs)
    ]
    return {
        "rmse_1step": rmse_1step(model, trajectories, graphs, dtype),
        "rmse_rollout": rmse_rollouts(results),
        "results": results,
        "graphs": graphs,
    }


def _step_rows(seed: int, results) -> list[dict]:
    return [
        {"seed": seed, "trajectory": k, "step": result.start + t + 1, "rmse": value}
        for k, result in enumerate(results)
        for t, value in enumerate(result.step_rmse)
    ]


def _summary(per_seed: dict[int, dict[str, float]]) -> dict[str, Any]:
    summary: dict[str, Any] = {"per_seed": per_seed}
    for metric in ("rmse_1step", "rmse_rollout"):
        mean, std = aggregate_seeds([m[metric] for m in per_seed.values()])
        summary[f"{metric}_mean"] = mean
        summary[f"{metric}_std"] = std
    return summary


@operation_timer("cmd_generate")
def cmd_generate(config: ExperimentConfig, out: Path, threads: int = 1) -> dict:
    """Write the configured train/test split under ``out/data``."""
    split = generate_dataset(config.dataset, threads=threads)
    directory = save_dataset(split, Path(out) / DATA_DIR)
    metrics = {
        "num_train": len(split.train),
        "num_test": len(split.test),
        "data_dir": str(directory),
    }
    write_manifest(out, "generate", config, metrics)
    return metrics


@operation_timer("cmd_train")
def cmd_train(
    config: ExperimentConfig, out: Path, threads: int = 1, resume: bool = False
) -> dict:
    """Train one model per seed into ``out/seed_<s>``."""
    split = dataset_for(config, out, threads)
    dtype = resolve_dtype()
    metrics: dict[str, Any] = {}
    for seed in config.seeds:
        trainer = Trainer(
            config.model, config.train, split.train, seed, seed_dir(out, seed), dtype
        )
        result = trainer.fit(resume=resume)
        final = result.history[-1] if result.history else {}
        metrics[str(seed)] = {
            "steps": result.steps,
            "parameters": result.model.num_parameters,
            "loss_total": final.get("loss_total"),
            "checkpoint": str(result.checkpoint) if result.checkpoint else None,
        }
    write_manifest(out, "train", config, metrics)
    return metrics


def _restore(
    config: ExperimentConfig, split: DatasetSplit, out: Path, seed: int, dtype
) -> MeshSurrogate:
    trainer = Trainer(
        config.model, config.train, split.train, seed, seed_dir(out, seed), dtype
    )
    if not trainer.resume():
        raise MissingArtifactError(
            str(seed_dir(out, seed) / "checkpoints"), "run 'meshrollout train' first"
        )
    trainer.model.eval()
    return trainer.model


def _probe(
    model: MeshSurrogate,
    config: ExperimentConfig,
    traj: Trajectory,
    graph: PreparedGraph,
    out: Path,
    seed: int,
    dtype: torch.dtype,
) -> None:
    """Export latents at ``eval.probe_step`` and fit the subtask probes on them."""
    first = 1 if config.model.include_history else 0
    t = min(max(config.eval.probe_step, first), traj.num_steps - 1)
    latents = collect_latents(model, traj, graph, t, dtype)
    if config.eval.export_latents:
        export_latents(seed_dir(out, seed) / "latents", latents)
    if config.eval.probe:
        report = subtask_probe(latents, probe_targets(traj, t), ProbeConfig(seed=seed))
        path = seed_dir(out, seed) / "probes.csv"
        write_csv(path, ["task", "layer", "loss"], report.rows())


@tracer.start_as_current_span("cli.cmd_eval")
@operation_timer("cmd_eval")
def cmd_eval(
    config: ExperimentConfig,
    out: Path,
    oracle: bool = False,
    persistence: bool = False,
) -> dict:
    """RMSE report of the trained seeds, or of a reference stepper."""
    split = dataset_for(config, out, create=False)
    test = split.test or split.train
    dtype = resolve_dtype()
    per_seed: dict[int, dict[str, float]] = {}
    step_rows: list[dict] = []

    if oracle or persistence:
        if oracle:
            evaluation = evaluate_stepper(
                lambda k: OracleStepper(test[k]), test, config.eval.horizon
            )
        else:
            evaluation = evaluate_stepper(
                lambda k: PersistenceStepper(), test, config.eval.horizon
            )
        per_seed[0] = {
            "rmse_1step": evaluation["rmse_1step"],
            "rmse_rollout": evaluation["rmse_rollout"],
        }
        step_rows = _step_rows(0, evaluation["results"])
    else:
        for seed in config.seeds:
            model = _restore(config, split, out, seed, dtype)
            evaluation = evaluate_model(model, config, test, seed, dtype)
            per_seed[seed] = {
                "rmse_1step": evaluation["rmse_1step"],
                "rmse_rollout": evaluation["rmse_rollout"],
            }
            step_rows.extend(_step_rows(seed, evaluation["results"]))
            if config.eval.probe or config.eval.export_latents:
                graph = evaluation["graphs"][0]
                _probe(model, config, test[0], graph, out, seed, dtype)

    summary = _summary(per_seed)
    summary["stepper"] = (
        "oracle" if oracle else "persistence" if persistence else "model"
    )
    write_csv(
        Path(out) / "metrics.csv",
        ["seed", "rmse_1step", "rmse_rollout"],
        [{"seed": s, **m} for s, m in per_seed.items()],
    )
    step_columns = ["seed", "trajectory", "step", "rmse"]
    write_csv(Path(out) / "step_rmse.csv", step_columns, step_rows)
    write_json(Path(out) / "metrics.json", summary)
    write_manifest(out, "eval", config, summary)
    logger.info(
        "Evaluation complete",
        rmse_1step=summary["rmse_1step_mean"],
        rmse_rollout=summary["rmse_rollout_mean"],
    )
    return summary


def _run_cell(cell, seed: int, split: DatasetSplit, out: Path, dtype) -> dict:
    with tracer.start_as_current_span("cli.ablation_cell") as span:
        span.set_attribute("cell", cell.key)
        span.set_attribute("seed", seed)
        run_dir = Path(out) / "cells" / cell.key / f"seed_{seed}"
        trainer = Trainer(
            cell.config.model, cell.config.train, split.train, seed, run_dir, dtype
        )
        result = trainer.fit()
        test = split.test or split.train
        evaluation = evaluate_model(result.model, cell.config, test, seed, dtype)
        return {
            "rmse_1step": evaluation["rmse_1step"],
            "rmse_rollout": evaluation["rmse_rollout"],
            "parameters": result.model.num_parameters,
            "latent_trend": final_latent_trend(result.latent_distances),
        }


def _replication_finding(rows: list[dict]) -> dict[str, Any]:
    """Directional check: the full model beats the matched baseline by a pooled std."""
    by_key = {row["cell"]: row for row in rows}
    baseline, ours = by_key["baseline"], by_key["mnp_temporal_rope"]
    variances = [baseline["rmse_rollout_std"] ** 2, ours["rmse_rollout_std"] ** 2]
    pooled = float(np.sqrt(np.mean(variances)))
    improved = ours["rmse_rollout_mean"] < baseline["rmse_rollout_mean"] - pooled
    return {"pooled_std": pooled, "improved": bool(improved)}


@tracer.start_as_current_span("cli.cmd_ablate")
@operation_timer("cmd_ablate")
def cmd_ablate(
    config: ExperimentConfig, axis: str, out: Path, threads: int = 1
) -> dict:
    """Train and evaluate every cell of ``axis`` for every seed.

    Cells run on a thread pool; results are merged by (cell, seed) so the
    table does not depend on completion order.
    """
    split = dataset_for(config, out, threads)
    reference = split.train[0]
    cells = ablation_cells(
        config,
        axis,
        _in_features(config, reference),
        reference.num_components,
        reference.mesh.dim,
    )
    dtype = resolve_dtype()
    jobs = [(cell, seed) for cell in cells for seed in config.seeds]
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        futures = {
            (cell.key, seed): pool.submit(_run_cell, cell, seed, split, out, dtype)
            for cell, seed in jobs
        }
        outcomes = {key: future.result() for key, future in futures.items()}

    rows = []
    for cell in cells:
        per_seed = {seed: outcomes[(cell.key, seed)] for seed in config.seeds}
        summary = _summary(
            {
                s: {"rmse_1step": r["rmse_1step"], "rmse_rollout": r["rmse_rollout"]}
                for s, r in per_seed.items()
            }
        )
        trends = [
            r["latent_trend"]
            for r in per_seed.values()
            if r["latent_trend"] is not None
        ]
        rows.append(
            {
                "cell": cell.key,
                **cell.values,
                "parameters": next(iter(per_seed.values()))["parameters"],
                "rmse_1step_mean": summary["rmse_1step_mean"],
                "rmse_1step_std": summary["rmse_1step_std"],
                "rmse_rollout_mean": summary["rmse_rollout_mean"],
                "rmse_rollout_std": summary["rmse_rollout_std"],
                "latent_increases": sum(t > 0 for t in trends) if trends else None,
                "seeds": len(per_seed),
            }
        )

    value_columns = sorted({key for cell in cells for key in cell.values})
    columns = [
        "cell",
        *value_columns,
        "parameters",
        "rmse_1step_mean",
        "rmse_1step_std",
        "rmse_rollout_mean",
        "rmse_rollout_std",
        "latent_increases",
        "seeds",
    ]
    write_csv(Path(out) / f"ablation_{axis}.csv", columns, rows)
    metrics: dict[str, Any] = {"axis": axis, "rows": rows}
    if axis == "replication":
        metrics["replication"] = _replication_finding(rows)
        if not metrics["replication"]["improved"]:
            logger.warning("Replication direction not met", **metrics["replication"])
    write_manifest(out, f"ablate:{axis}", config, metrics)
    return metrics


@operation_timer("cmd_verify")
def cmd_verify(out: Path, seed: int = 0) -> dict:
    """Run the numerical verification suite and write its report and tables."""
    report = run_verification_suite(seed=seed)
    write_tables(report, Path(out) / "tables")
    payload = report.to_dict()
    write_json(Path(out) / "verification.json", payload)
    summary = {"passed": report.passed, "failed": report.failed()}
    write_manifest(out, "verify", None, summary)
    if report.passed:
        logger.info("Verification passed", checks=len(report.checks))
    else:
        logger.error("Verification failed", failed=report.failed())
    return payload
