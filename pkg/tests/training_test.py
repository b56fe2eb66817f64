"""Tests for the schedule, AdamW, losses, samples, checkpoints and the training loop."""

import csv
import shutil
import threading

import numpy as np
import pytest
import torch
from torch import nn

from meshrollout.data import FieldKind, FieldSchema, FieldSpec, NoiseSpec, Trajectory
from meshrollout.mnp import DEFAULT_ALPHA
from meshrollout.theory import WlsOperator
from meshrollout.training import (
    LATENT_FILE,
    LOG_FILE,
    AdamMoments,
    CheckpointError,
    IncompatibleLossError,
    NonFiniteGradientError,
    Prefetcher,
    TrainConfig,
    Trainer,
    adamw_step,
    check_finite_gradients,
    checkpoint_path,
    cosine_similarity_loss,
    divergence_residual,
    epoch_order,
    estimate_noise_scale,
    final_latent_trend,
    grad_supervision,
    latest_checkpoint,
    load_checkpoint,
    lr_at,
    main_loss,
    make_sample,
    run_hash,
    sample_pairs,
    save_checkpoint,
)


@pytest.fixture
def fast_config():
    """Short schedule without prefetching so steps are cheap."""
    return TrainConfig(epochs=1, max_steps=4, warmup_steps=2, prefetch=0)


class TestSchedule:
    """Warmup plus cosine decay."""

    @pytest.fixture
    def cfg(self):
        return TrainConfig(max_lr=1e-3, warmup_steps=10)

    def test_warmup(self, cfg):
        """Linear from zero to the peak."""
        assert lr_at(0, cfg, 100) == 0.0
        assert lr_at(5, cfg, 100) == pytest.approx(5e-4)
        assert lr_at(10, cfg, 100) == pytest.approx(1e-3)

    def test_decay(self, cfg):
        """Half the peak midway through the decay and zero at the end."""
        assert lr_at(55, cfg, 100) == pytest.approx(5e-4)
        assert lr_at(100, cfg, 100) == 0.0
        assert lr_at(150, cfg, 100) == 0.0

    def test_monotone_after_warmup(self, cfg):
        """The cosine branch never increases."""
        rates = [lr_at(s, cfg, 100) for s in range(10, 101)]
        assert all(b <= a for a, b in zip(rates, rates[1:]))

    def test_negative_step(self, cfg):
        """Steps count from zero."""
        with pytest.raises(ValueError):
            lr_at(-1, cfg, 100)


class TestAdamW:
    """In-place AdamW update."""

    @pytest.fixture
    def cfg(self):
        return TrainConfig(betas=(0.9, 0.95), eps=1e-8, weight_decay=0.01)

    def test_first_step_by_hand(self, cfg):
        """p=1, g=1, lr=0.1 moves to 0.999 - 0.1."""
        p, g = torch.ones(1, dtype=torch.float64), torch.ones(1, dtype=torch.float64)
        adamw_step([p], [g], AdamMoments.zeros_like([p]), cfg, step=1, lr=0.1)
        assert p.item() == pytest.approx(0.899, abs=1e-7)

    def test_decay_only(self, cfg):
        """A zero gradient only applies decoupled decay."""
        p = torch.full((3,), 2.0, dtype=torch.float64)
        adamw_step([p], [torch.zeros(3, dtype=torch.float64)], AdamMoments.zeros_like([p]), cfg, 1, 0.1)
        assert torch.allclose(p, torch.full((3,), 1.998, dtype=torch.float64))

    def test_matches_torch(self, cfg):
        """Three steps agree with torch.optim.AdamW."""
        torch.manual_seed(2)
        reference = nn.Parameter(torch.randn(4, dtype=torch.float64))
        mine = reference.detach().clone()
        optimizer = torch.optim.AdamW(
            [reference], lr=0.05, betas=cfg.betas, eps=cfg.eps, weight_decay=cfg.weight_decay
        )
        moments = AdamMoments.zeros_like([mine])
        for step in range(1, 4):
            grad = torch.randn(4, dtype=torch.float64)
            reference.grad = grad.clone()
            optimizer.step()
            adamw_step([mine], [grad], moments, cfg, step, 0.05)
        assert torch.allclose(mine, reference.detach(), atol=1e-12)

    def test_non_finite_gradient(self):
        """NaN gradients are reported by parameter name."""
        weight = nn.Parameter(torch.ones(2))
        weight.grad = torch.tensor([1.0, float("nan")])
        with pytest.raises(NonFiniteGradientError) as excinfo:
            check_finite_gradients([("encoder.weight", weight)], step=7)
        assert excinfo.value.parameters == ["encoder.weight"]
        assert excinfo.value.step == 7

    def test_nan_gradient_leaves_state(self, cfg):
        """A NaN gradient raises before parameters or moments change."""
        p = torch.ones(3, dtype=torch.float64)
        moments = AdamMoments.zeros_like([p])
        grad = torch.tensor([0.1, float("nan"), 0.2], dtype=torch.float64)
        with pytest.raises(NonFiniteGradientError) as excinfo:
            adamw_step([p], [grad], moments, cfg, step=4, lr=0.1)
        assert excinfo.value.parameters == ["params[0]"]
        assert excinfo.value.step == 4
        assert torch.equal(p, torch.ones(3, dtype=torch.float64))
        assert not moments.first[0].any() and not moments.second[0].any()


class TestLosses:
    """Main and auxiliary loss terms."""

    def test_main_loss(self):
        """Mean over nodes and components."""
        predicted = torch.tensor([[1.0, 2.0], [3.0, 4.0]])
        assert main_loss(predicted, torch.zeros(2, 2)).item() == pytest.approx(7.5)

    def test_masked_main_loss(self):
        """Masked entries leave the mean."""
        predicted = torch.tensor([[1.0, 2.0], [3.0, 4.0]])
        mask = torch.tensor([[True, False], [False, True]])
        assert main_loss(predicted, torch.zeros(2, 2), mask).item() == pytest.approx(8.5)

    def test_cosine(self):
        """Aligned vectors score 0, opposite ones 2."""
        x = torch.tensor([[1.0, 2.0], [0.5, -1.0]])
        assert cosine_similarity_loss(x, 3.0 * x).item() == pytest.approx(0.0, abs=1e-6)
        assert cosine_similarity_loss(x, -x).item() == pytest.approx(2.0)

    def test_gradient_terms(self, small_mesh):
        """Equal fields have no gradient loss; rotation fields are divergence-free."""
        operator = WlsOperator(small_mesh)
        values = torch.as_tensor(np.random.default_rng(0).normal(size=(60, 3)))
        assert grad_supervision(values, values, operator).item() == 0.0
        x, y = small_mesh.positions[:, 0], small_mesh.positions[:, 1]
        rotation = torch.as_tensor(np.stack([y, -x], axis=1))
        assert divergence_residual(rotation, operator).item() < 1e-18


class TestSamples:
    """Training pairs, their order and sample construction."""

    def test_pairs(self, small_trajectories):
        """Four pairs per five-state trajectory, three with history."""
        assert len(sample_pairs(small_trajectories, include_history=False)) == 8
        assert len(sample_pairs(small_trajectories, include_history=True)) == 6

    def test_epoch_order(self, small_trajectories):
        """Orders are permutations fixed by seed and epoch."""
        pairs = sample_pairs(small_trajectories, False)
        first = epoch_order(pairs, seed=0, epoch=0)
        assert first == epoch_order(pairs, seed=0, epoch=0)
        assert sorted(first) == sorted(pairs)
        assert first != epoch_order(pairs, seed=0, epoch=1)

    def test_noise_on_inputs_only(self, small_trajectories):
        """Noise perturbs the state but never the target."""
        args = (small_trajectories, (0, 1))
        clean = make_sample(*args, NoiseSpec(), 0, 0, False, False, torch.float64)
        noisy = make_sample(
            *args, NoiseSpec(sigma={"scalar": 0.1}), 0, 0, False, False, torch.float64
        )
        assert torch.equal(clean.state, torch.as_tensor(small_trajectories[0].states[1], dtype=torch.float64))
        assert torch.equal(noisy.target, clean.target)
        assert not torch.equal(noisy.state[:, 0], clean.state[:, 0])
        assert torch.equal(noisy.state[:, 1:], clean.state[:, 1:])

    def test_noise_reproducible(self, small_trajectories):
        """Same (seed, index) gives the same draw."""
        spec = NoiseSpec(sigma={"scalar": 0.1})
        a = make_sample(small_trajectories, (1, 2), spec, 4, 9, False, False, torch.float32)
        b = make_sample(small_trajectories, (1, 2), spec, 4, 9, False, False, torch.float32)
        assert torch.equal(a.features, b.features)

    def test_prefetcher_order(self):
        """Items arrive in production order."""
        assert list(Prefetcher(iter(range(20)), depth=3)) == list(range(20))

    def test_prefetcher_error(self):
        """Source errors surface in the consumer."""

        def source():
            yield 1
            raise RuntimeError("boom")

        consumed = []
        with pytest.raises(RuntimeError, match="boom"):
            for item in Prefetcher(source(), depth=2):
                consumed.append(item)
        assert consumed == [1]

    def test_prefetcher_close_stops_worker(self):
        """Leaving early and closing ends the worker thread."""
        before = threading.active_count()
        for _ in range(5):
            prefetcher = Prefetcher(iter(range(100)), depth=2)
            with prefetcher:
                for i, _item in enumerate(prefetcher):
                    if i == 3:
                        break
            assert not prefetcher.is_alive
        assert threading.active_count() == before


class TestCheckpoint:
    """Checkpoint files."""

    def test_round_trip(self, tmp_path):
        """Parameters and step survive a save/load cycle."""
        model = nn.Linear(3, 2)
        path = save_checkpoint(checkpoint_path(tmp_path, 5), model, None, 5, "abc")
        restored = nn.Linear(3, 2)
        payload = load_checkpoint(path, restored, config_hash="abc")
        assert payload["step"] == 5
        assert torch.equal(restored.weight, model.weight)

    def test_hash_mismatch(self, tmp_path):
        """A checkpoint of another configuration is refused."""
        model = nn.Linear(3, 2)
        path = save_checkpoint(checkpoint_path(tmp_path, 1), model, None, 1, "abc")
        with pytest.raises(CheckpointError):
            load_checkpoint(path, nn.Linear(3, 2), config_hash="xyz")

    def test_latest(self, tmp_path):
        """The highest step wins."""
        model = nn.Linear(1, 1)
        for step in (2, 10, 4):
            save_checkpoint(checkpoint_path(tmp_path, step), model, None, step, "h")
        assert latest_checkpoint(tmp_path).name == "step_00000010.pt"
        assert latest_checkpoint(tmp_path / "empty") is None

    def test_missing(self, tmp_path):
        """Missing files raise CheckpointError."""
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "none.pt", nn.Linear(1, 1))


class TestTrainer:
    """The next-step training loop."""

    def test_run_hash(self, tiny_model_config, fast_config):
        """Seeds and configs change the hash."""
        base = run_hash(tiny_model_config, fast_config, 0)
        assert base == run_hash(tiny_model_config, fast_config, 0)
        assert base != run_hash(tiny_model_config, fast_config, 1)
        other = fast_config.model_copy(update={"max_lr": 2e-3})
        assert base != run_hash(tiny_model_config, other, 0)

    def test_deterministic(self, tiny_model_config, fast_config, small_trajectories):
        """Same seed, same losses and weights."""
        first = Trainer(tiny_model_config, fast_config, small_trajectories, seed=3).fit()
        second = Trainer(tiny_model_config, fast_config, small_trajectories, seed=3).fit()
        assert first.steps == second.steps == 4
        assert [r["loss_total"] for r in first.history] == [
            r["loss_total"] for r in second.history
        ]
        for a, b in zip(first.model.parameters(), second.model.parameters()):
            assert torch.equal(a, b)

    def test_accumulation_sets_steps(self, tiny_model_config, small_trajectories):
        """Eight pairs with accumulation 3 take three steps per epoch."""
        cfg = TrainConfig(epochs=2, accumulation=3, warmup_steps=1, prefetch=1)
        trainer = Trainer(tiny_model_config, cfg, small_trajectories)
        assert trainer.total_steps == 6
        assert trainer.fit().steps == 6

    def test_all_terms(self, tiny_model_config, small_trajectories):
        """Every loss term is finite with all options on."""
        model_config = tiny_model_config.model_copy(
            update={
                "include_history": True,
                "mnp": tiny_model_config.mnp.model_copy(update={"enabled": True, "centers": 4}),
                "temporal": tiny_model_config.temporal.model_copy(
                    update={"enabled": True, "intermediate_supervision": True}
                ),
            }
        )
        cfg = TrainConfig(
            max_steps=2,
            warmup_steps=1,
            prefetch=0,
            noise={"scalar": 0.01},
            exclude_enforced_from_loss=True,
            aux={"grad_supervision": True, "divergence": True, "cosine_sim": True},
        )
        result = Trainer(model_config, cfg, small_trajectories).fit()
        row = result.history[-1]
        for name in ("loss_main", "loss_mnp", "loss_grad", "loss_div", "loss_cos"):
            assert np.isfinite(row[name])
        assert row["loss_mnp"] > 0.0
        assert row["loss_total"] >= row["loss_main"] + DEFAULT_ALPHA * row["loss_mnp"]

    def test_non_finite_gradient_aborts(self, tiny_model_config, fast_config, small_trajectories):
        """A NaN weight stops training before the update."""
        trainer = Trainer(tiny_model_config, fast_config, small_trajectories)
        with torch.no_grad():
            trainer.model.encoder.input_layer.weight[0, 0] = float("nan")
        with pytest.raises(NonFiniteGradientError):
            trainer.fit()
        assert trainer.step == 0

    def test_early_stop_releases_prefetcher(self, tiny_model_config, small_trajectories):
        """Stopping at max_steps leaves no prefetch worker behind."""
        before = threading.active_count()
        cfg = TrainConfig(epochs=3, max_steps=2, warmup_steps=1, prefetch=2)
        assert Trainer(tiny_model_config, cfg, small_trajectories).fit().steps == 2
        assert threading.active_count() == before

    def test_divergence_needs_velocity_per_axis(self, tiny_model_config, small_trajectories):
        """The divergence term is refused for data without a full velocity."""
        scalar_only = [
            Trajectory(
                mesh=traj.mesh,
                states=traj.states[:, :, :1],
                delta_t=traj.delta_t,
                schema=FieldSchema(fields=(FieldSpec("scalar", FieldKind.SCALAR),)),
            )
            for traj in small_trajectories
        ]
        cfg = TrainConfig(max_steps=1, warmup_steps=1, prefetch=0, aux={"divergence": True})
        with pytest.raises(IncompatibleLossError) as excinfo:
            Trainer(tiny_model_config, cfg, scalar_only)
        assert excinfo.value.loss == "divergence"

    def test_logs_and_latent_probe(self, tiny_model_config, small_trajectories, tmp_path):
        """The run directory gets the loss log and latent distances."""
        cfg = TrainConfig(
            max_steps=4, warmup_steps=2, prefetch=0, checkpoint_every=2, latent_probe=True
        )
        result = Trainer(tiny_model_config, cfg, small_trajectories, run_dir=tmp_path).fit()
        assert result.checkpoint == checkpoint_path(tmp_path, 4)
        with open(tmp_path / LOG_FILE) as f:
            rows = list(csv.DictReader(f))
        assert [int(r["step"]) for r in rows] == [1, 2, 3, 4]
        assert "loss_intermediate" in rows[0]
        with open(tmp_path / LATENT_FILE) as f:
            header = next(csv.reader(f))
        assert header == ["step", "layer_0", "layer_1", "layer_2"]
        assert len(result.latent_distances) == 2

    def test_resume_matches_uninterrupted(
        self, tiny_model_config, small_trajectories, tmp_path
    ):
        """Resuming from the midpoint checkpoint reproduces the full run."""
        cfg = TrainConfig(max_steps=4, warmup_steps=2, prefetch=0, checkpoint_every=2)
        full_dir, resumed_dir = tmp_path / "full", tmp_path / "resumed"
        full = Trainer(tiny_model_config, cfg, small_trajectories, run_dir=full_dir).fit()

        midpoint = checkpoint_path(full_dir, 2)
        target = checkpoint_path(resumed_dir, 2)
        target.parent.mkdir(parents=True)
        shutil.copy(midpoint, target)
        resumed = Trainer(
            tiny_model_config, cfg, small_trajectories, run_dir=resumed_dir
        ).fit(resume=True)

        assert resumed.steps == 4
        assert len(resumed.history) == 4
        for a, b in zip(full.model.parameters(), resumed.model.parameters()):
            assert torch.allclose(a, b, atol=1e-7)

    def test_latent_trend(self):
        """Last-layer distance change between the first and last probe."""
        rows = [
            {"step": 1, "layer_0": 1.0, "layer_1": 0.5},
            {"step": 2, "layer_0": 1.0, "layer_1": 0.8},
        ]
        assert final_latent_trend(rows) == pytest.approx(0.3)
        assert final_latent_trend(rows[:1]) is None


class TestCalibration:
    """Noise scale from one-step errors."""

    def test_untrained_model(self, tiny_model_config, fast_config, small_trajectories):
        """A zero-increment model measures the std of u_{t+1} - u_t."""
        trainer = Trainer(tiny_model_config, fast_config, small_trajectories)
        scale = estimate_noise_scale(trainer.model, small_trajectories, trainer.graphs)
        assert set(scale) == {"scalar", "velocity_x", "velocity_y"}
        expected = max(
            float(np.std(traj.states[t].astype(np.float64) - traj.states[t + 1], axis=0)[0])
            for traj in small_trajectories
            for t in range(traj.num_steps - 1)
        )
        assert scale["scalar"] == pytest.approx(expected, rel=1e-5)
