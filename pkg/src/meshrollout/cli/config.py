"""Declarative experiment description read from a JSON file."""

import json
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from meshrollout.data import DatasetConfig
from meshrollout.hashing import content_hash
from meshrollout.surrogate import ModelConfig
from meshrollout.training import TrainConfig

from .exceptions import ConfigFileError, ConfigValidationError


class EvalConfig(BaseModel):
    """Rollout horizon and optional latent analyses of ``eval``."""

    model_config = ConfigDict(extra="forbid")

    horizon: Optional[int] = Field(
        default=None, ge=0, description="Rollout steps (default: full trajectory)"
    )
    probe: bool = Field(default=False, description="Fit subtask probes on latents")
    probe_step: int = Field(default=0, ge=0, description="Time step probed")
    export_latents: bool = Field(
        default=False, description="Write per-layer latents and their PCA"
    )


class ExperimentConfig(BaseModel):
    """Everything needed to reproduce a run, apart from the seeds override."""

    model_config = ConfigDict(extra="forbid")

    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    output_dir: Path = Field(default=Path("runs/experiment"))

    @property
    def seeds(self) -> list[int]:
        return list(self.train.seeds)

    @property
    def content_hash(self) -> str:
        """Hash of every field except the output location."""
        return content_hash(self.model_dump(mode="json", exclude={"output_dir"}))

    def with_seeds(self, seeds: list[int]) -> "ExperimentConfig":
        train = self.train.model_copy(update={"seeds": list(seeds)})
        return self.model_copy(update={"train": train})


def _dotted(location: tuple) -> str:
    return ".".join(str(part) for part in location) or "<root>"


def parse_experiment(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse JSON ``text``; errors name the line/column or the dotted key."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigFileError(source, e.msg, line=e.lineno, column=e.colno) from e
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        problems = [f"{_dotted(err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ConfigValidationError(source, problems) from e


def load_experiment(path: Optional[Union[str, Path]]) -> ExperimentConfig:
    """Read an experiment file; ``None`` gives the defaults."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigFileError(str(path), e.strerror or "unreadable") from e
    return parse_experiment(text, str(path))
