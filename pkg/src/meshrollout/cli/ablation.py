"""Ablation axes: named configuration variants of one base experiment."""

from dataclasses import dataclass, field
from typing import Any

import structlog

from meshrollout.layers import Architecture, PeMode
from meshrollout.surrogate import count_for, match_parameters, width_for_budget
from meshrollout.temporal import CorrectionFrequency

from .config import ExperimentConfig

logger = structlog.get_logger(__name__)

MNP_CENTERS = (0, 64, 256)
GATE_MIXER_VARIANTS = {
    "full": (True, True, True),
    "cross_attention_only": (True, False, False),
    "gate_only": (True, True, False),
    "mixer_only": (False, False, True),
}
AUX_VARIANTS = ("none", "grad_supervision", "divergence", "cosine_sim")
DEPTH_FACTORS = (0.5, 1.0, 2.0)


@dataclass
class AblationCell:
    """One configuration of a sweep and the axis values that define it."""

    key: str
    config: ExperimentConfig
    values: dict[str, Any] = field(default_factory=dict)


def _update(config: ExperimentConfig, section: str, **changes) -> ExperimentConfig:
    return config.model_copy(
        update={section: getattr(config, section).model_copy(update=changes)}
    )


def _with_model(config: ExperimentConfig, **changes) -> ExperimentConfig:
    # Revalidate so that inconsistent combinations fail here, not mid-sweep.
    model = type(config.model).model_validate(
        {**config.model.model_dump(), **changes}
    )
    return config.model_copy(update={"model": model})


def _pe_mode_cells(config: ExperimentConfig, **_) -> list[AblationCell]:
    modes = list(PeMode)
    if config.model.architecture != Architecture.TRANSFORMER:
        modes = [PeMode.NONE, PeMode.LEARNED_ABS]
    return [
        AblationCell(
            mode.value, _with_model(config, pe_mode=mode), {"pe_mode": mode.value}
        )
        for mode in modes
    ]


def _mnp_center_cells(config: ExperimentConfig, **_) -> list[AblationCell]:
    cells = []
    for centers in MNP_CENTERS:
        mnp = config.model.mnp.model_copy(
            update={"enabled": centers > 0, "centers": centers}
        )
        cells.append(
            AblationCell(
                f"centers_{centers}",
                _with_model(config, mnp=mnp.model_dump()),
                {"mnp_centers": centers},
            )
        )
    return cells


def _temporal_frequency_cells(config: ExperimentConfig, **_) -> list[AblationCell]:
    temporal = config.model.temporal
    variants = [("off", temporal.model_copy(update={"enabled": False}))]
    for frequency in CorrectionFrequency:
        variants.append(
            (
                frequency.value,
                temporal.model_copy(update={"enabled": True, "frequency": frequency}),
            )
        )
    return [
        AblationCell(
            name,
            _with_model(config, temporal=variant.model_dump()),
            {"temporal_frequency": name},
        )
        for name, variant in variants
    ]


def _gate_mixer_cells(config: ExperimentConfig, **_) -> list[AblationCell]:
    cells = []
    for name, (attention, gate, mixer) in GATE_MIXER_VARIANTS.items():
        temporal = config.model.temporal.model_copy(
            update={
                "enabled": True,
                "use_attention": attention,
                "use_gate": gate,
                "use_mixer": mixer,
            }
        )
        cells.append(
            AblationCell(
                name,
                _with_model(config, temporal=temporal.model_dump()),
                {"gate_mixer": name},
            )
        )
    return cells


def _aux_loss_cells(config: ExperimentConfig, **_) -> list[AblationCell]:
    cells = []
    for name in AUX_VARIANTS:
        flags = {flag: flag == name for flag in AUX_VARIANTS[1:]}
        aux = config.train.aux.model_copy(update=flags)
        cells.append(
            AblationCell(name, _update(config, "train", aux=aux), {"aux_losses": name})
        )
    return cells


def _width_depth_cells(
    config: ExperimentConfig, in_features: int, out_features: int, dim: int
) -> list[AblationCell]:
    base = config.model
    budget = count_for(base, in_features, out_features, dim)
    cells = []
    for factor in DEPTH_FACTORS:
        depth = max(1, int(round(base.depth * factor)))
        model = width_for_budget(base, depth, budget, in_features, out_features, dim)
        cells.append(
            AblationCell(
                f"depth_{depth}",
                config.model_copy(update={"model": model}),
                {"depth": depth, "width": model.width, "mlp_hidden": model.mlp_hidden},
            )
        )
    return cells


def _replication_cells(
    config: ExperimentConfig, in_features: int, out_features: int, dim: int
) -> list[AblationCell]:
    """Plain transformer against MNP + temporal + RoPE at equal parameter count."""
    ours = _with_model(
        config,
        architecture=Architecture.TRANSFORMER,
        pe_mode=PeMode.ROPE,
        mnp={**config.model.mnp.model_dump(), "enabled": True},
        temporal={**config.model.temporal.model_dump(), "enabled": True},
    )
    target = count_for(ours.model, in_features, out_features, dim)
    plain = _with_model(
        config,
        architecture=Architecture.TRANSFORMER,
        pe_mode=PeMode.NONE,
        mnp={**config.model.mnp.model_dump(), "enabled": False},
        temporal={**config.model.temporal.model_dump(), "enabled": False},
    )
    matched = match_parameters(plain.model, target, in_features, out_features, dim)
    baseline = plain.model_copy(update={"model": matched})
    return [
        AblationCell("baseline", baseline, {"variant": "baseline"}),
        AblationCell("mnp_temporal_rope", ours, {"variant": "mnp_temporal_rope"}),
    ]


AXES = {
    "pe_mode": _pe_mode_cells,
    "mnp_centers": _mnp_center_cells,
    "temporal_frequency": _temporal_frequency_cells,
    "gate_mixer": _gate_mixer_cells,
    "aux_losses": _aux_loss_cells,
    "width_vs_depth": _width_depth_cells,
    "replication": _replication_cells,
}


def ablation_cells(
    config: ExperimentConfig,
    axis: str,
    in_features: int,
    out_features: int,
    dim: int = 2,
) -> list[AblationCell]:
    """Configurations swept along ``axis``, in a fixed order."""
    if axis not in AXES:
        raise ValueError(f"unknown ablation axis '{axis}'; choose from {sorted(AXES)}")
    cells = AXES[axis](
        config, in_features=in_features, out_features=out_features, dim=dim
    )
    logger.info("Built ablation cells", axis=axis, cells=[c.key for c in cells])
    return cells
