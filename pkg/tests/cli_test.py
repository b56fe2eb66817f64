"""Tests for experiment parsing, ablation axes and the command-line entry point."""

import json

import pytest

from meshrollout.cli import (
    AXES,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_RUN_ERROR,
    ConfigFileError,
    ConfigValidationError,
    ExperimentConfig,
    ablation_cells,
    build_parser,
    load_experiment,
    main,
    parse_experiment,
)
from meshrollout.data import FieldSchema, feature_width

IN_FEATURES = feature_width(FieldSchema.advection_diffusion(), 2, False, False)

TINY_EXPERIMENT = {
    "dataset": {"num_nodes": 40, "steps": 3, "num_train": 2, "num_test": 1, "seed": 4},
    "model": {"architecture": "transformer", "depth": 1, "width": 8, "heads": 2},
    "train": {"max_steps": 2, "warmup_steps": 1, "prefetch": 0, "seeds": [0]},
}


@pytest.fixture
def tiny_config_file(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(TINY_EXPERIMENT))
    return path


@pytest.fixture
def small_experiment():
    """Default experiment with a model small enough to count quickly."""
    return ExperimentConfig.model_validate(
        {"model": {"depth": 2, "width": 16, "heads": 2}}
    )


class TestExperimentConfig:
    """Parsing and validation of experiment files."""

    def test_defaults(self):
        """No file gives the default experiment."""
        config = load_experiment(None)
        assert config.seeds == [0]
        assert config.dataset.delta_t == 0.002

    def test_json_error_position(self):
        """Syntax errors carry line and column."""
        with pytest.raises(ConfigFileError) as excinfo:
            parse_experiment('{\n  "model": }', source="bad.json")
        assert excinfo.value.line == 2
        assert excinfo.value.column is not None
        assert "bad.json:2:" in excinfo.value.message

    def test_validation_error_path(self):
        """Schema violations name the dotted key."""
        with pytest.raises(ConfigValidationError) as excinfo:
            parse_experiment('{"train": {"max_lr": -1}}')
        assert any(p.startswith("train.max_lr") for p in excinfo.value.problems)

    def test_unknown_key(self):
        """Typos are reported rather than ignored."""
        with pytest.raises(ConfigValidationError):
            parse_experiment('{"modle": {}}')

    def test_missing_file(self, tmp_path):
        """An absent path is a file error."""
        with pytest.raises(ConfigFileError):
            load_experiment(tmp_path / "absent.json")

    def test_hash_ignores_output_dir(self):
        """Moving a run does not change its identity."""
        a = ExperimentConfig(output_dir="runs/a")
        b = ExperimentConfig(output_dir="runs/b")
        assert a.content_hash == b.content_hash
        assert a.content_hash != a.with_seeds([1, 2]).content_hash


class TestParser:
    """Argument parsing."""

    def test_seed_count_and_list(self):
        """A count expands to 0..n-1; a list is taken as given."""
        parser = build_parser()
        assert parser.parse_args(["train", "--seeds", "3"]).seeds == [0, 1, 2]
        assert parser.parse_args(["train", "--seeds", "4,7"]).seeds == [4, 7]

    def test_bad_seeds(self):
        """Unparseable seeds stop argument parsing."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train", "--seeds", "a,b"])

    def test_generate_aliases(self):
        """Short and long generate flags map to the same fields."""
        args = build_parser().parse_args(
            ["generate", "--trajectories", "3", "--dt", "0.001", "--num-nodes", "80"]
        )
        assert (args.num_train, args.delta_t, args.num_nodes) == (3, 0.001, 80)

    def test_unknown_axis(self):
        """Ablation axes are a closed set."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["ablate", "--axis", "nonsense"])


class TestAblation:
    """Cells of every ablation axis."""

    def test_unknown_axis(self, small_experiment):
        """ablation_cells rejects names outside AXES."""
        with pytest.raises(ValueError):
            ablation_cells(small_experiment, "nonsense", IN_FEATURES, 3)

    def test_pe_modes(self, small_experiment):
        """Every positional mode for the transformer."""
        cells = ablation_cells(small_experiment, "pe_mode", IN_FEATURES, 3)
        assert [c.key for c in cells] == [
            "none",
            "rope",
            "learned_abs",
            "learned_relbias",
            "distance_weighted",
        ]

    def test_pe_modes_for_message_passing(self):
        """Attention-only modes are skipped for MGN."""
        config = ExperimentConfig.model_validate(
            {"model": {"architecture": "mgn", "width": 16, "heads": 2}}
        )
        cells = ablation_cells(config, "pe_mode", IN_FEATURES, 3)
        assert [c.key for c in cells] == ["none", "learned_abs"]

    def test_mnp_centers(self, small_experiment):
        """Zero centers disables the head."""
        cells = ablation_cells(small_experiment, "mnp_centers", IN_FEATURES, 3)
        assert [c.key for c in cells] == ["centers_0", "centers_64", "centers_256"]
        assert not cells[0].config.model.mnp.enabled
        assert cells[2].config.model.mnp.enabled
        assert cells[2].config.model.mnp.centers == 256

    def test_temporal_and_gates(self, small_experiment):
        """Frequency and gate/mixer variants all enable the corrector."""
        frequency = ablation_cells(small_experiment, "temporal_frequency", IN_FEATURES, 3)
        assert [c.key for c in frequency] == ["off", "every_layer", "last_layer"]
        gates = ablation_cells(small_experiment, "gate_mixer", IN_FEATURES, 3)
        assert len(gates) == 4
        only = next(c for c in gates if c.key == "mixer_only").config.model.temporal
        assert (only.use_attention, only.use_gate, only.use_mixer) == (False, False, True)

    def test_aux_losses(self, small_experiment):
        """At most one auxiliary term per cell."""
        cells = ablation_cells(small_experiment, "aux_losses", IN_FEATURES, 3)
        flags = [
            (c.config.train.aux.grad_supervision, c.config.train.aux.divergence, c.config.train.aux.cosine_sim)
            for c in cells
        ]
        assert flags == [
            (False, False, False),
            (True, False, False),
            (False, True, False),
            (False, False, True),
        ]

    def test_width_vs_depth(self, small_experiment):
        """Half, equal and double depth."""
        cells = ablation_cells(small_experiment, "width_vs_depth", IN_FEATURES, 3)
        assert [c.key for c in cells] == ["depth_1", "depth_2", "depth_4"]
        assert all(c.config.model.width % c.config.model.heads == 0 for c in cells)

    def test_replication(self, small_experiment):
        """A plain baseline against the full model."""
        baseline, ours = ablation_cells(small_experiment, "replication", IN_FEATURES, 3)
        assert baseline.key == "baseline"
        assert not baseline.config.model.mnp.enabled
        assert ours.config.model.mnp.enabled and ours.config.model.temporal.enabled
        assert ours.config.model.pe_mode == "rope"

    def test_every_axis_is_registered(self):
        """The parser offers exactly the registered axes."""
        assert set(AXES) == {
            "pe_mode",
            "mnp_centers",
            "temporal_frequency",
            "gate_mixer",
            "aux_losses",
            "width_vs_depth",
            "replication",
        }


class TestMain:
    """Exit codes and artifacts of the commands."""

    def test_bad_config_exit_code(self, tmp_path):
        """Invalid configurations exit with 2."""
        path = tmp_path / "bad.json"
        path.write_text('{"model": {"width": 10, "heads": 3}}')
        assert main(["train", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG_ERROR

    def test_eval_without_training(self, tiny_config_file, tmp_path):
        """Evaluating before generate/train is a run error."""
        out = tmp_path / "run"
        assert main(["eval", "--config", str(tiny_config_file), "--out", str(out)]) == EXIT_RUN_ERROR

    @pytest.mark.integration
    def test_generate_train_eval(self, tiny_config_file, tmp_path):
        """The three commands chain through the output directory."""
        out = tmp_path / "run"
        common = ["--config", str(tiny_config_file), "--out", str(out)]
        assert main(["generate", *common]) == EXIT_OK
        assert (out / "data" / "split.json").exists()
        assert main(["train", *common]) == EXIT_OK
        assert (out / "seed_0" / "checkpoints" / "step_00000002.pt").exists()
        assert main(["eval", *common]) == EXIT_OK
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["stepper"] == "model"
        assert metrics["rmse_1step_std"] == 0.0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "eval"

    @pytest.mark.integration
    def test_reference_steppers(self, tiny_config_file, tmp_path):
        """The oracle scores zero; persistence does not."""
        out = tmp_path / "run"
        common = ["--config", str(tiny_config_file), "--out", str(out)]
        assert main(["generate", *common]) == EXIT_OK
        assert main(["eval", "--oracle", *common]) == EXIT_OK
        oracle = json.loads((out / "metrics.json").read_text())
        assert oracle["rmse_rollout_mean"] == 0.0
        assert main(["eval", "--persistence", *common]) == EXIT_OK
        persistence = json.loads((out / "metrics.json").read_text())
        assert persistence["rmse_rollout_mean"] > 0.0

    @pytest.mark.slow
    def test_verify(self, tmp_path):
        """The verification suite passes and writes its tables."""
        assert main(["verify", "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "verification.json").exists()
        assert len(list((tmp_path / "tables").iterdir())) == 4
