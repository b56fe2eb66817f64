"""Axis-wise rotary positional encoding for 2D and 3D node coordinates.

Channel pairs ``(2r, 2r + 1)`` of a query or key head are assigned to the
spatial axes round-robin (pair ``r`` rotates with axis ``r mod dim``) and
turned by ``omega_k * p_a`` where ``p_a`` is the centered coordinate along
that axis and ``k = r // dim`` indexes a geometric frequency ladder shared by
all axes. Channels beyond the last full round of pairs pass through.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch

from meshrollout.autodiff import ops

from .exceptions import RopeConfigError


@dataclass(frozen=True)
class RopeConfig:
    """Pair-to-axis assignment and rotation frequencies (radians per meter)."""

    dim: int
    head_dim: int
    pair_axes: tuple[int, ...]
    pair_frequencies: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise RopeConfigError(f"RoPE supports 2 or 3 axes, got {self.dim}")
        if len(self.pair_axes) != len(self.pair_frequencies):
            raise RopeConfigError("pair_axes and pair_frequencies differ in length")
        if 2 * len(self.pair_axes) > self.head_dim:
            raise RopeConfigError(
                f"{len(self.pair_axes)} pairs do not fit in head width {self.head_dim}"
            )
        if any(not 0 <= a < self.dim for a in self.pair_axes):
            raise RopeConfigError(f"pair axis outside [0, {self.dim})")
        for axis in range(self.dim):
            freqs = [f for a, f in zip(self.pair_axes, self.pair_frequencies) if a == axis]
            if any(b >= a for a, b in zip(freqs, freqs[1:])):
                raise RopeConfigError(
                    f"frequencies of axis {axis} are not strictly decreasing"
                )

    @property
    def num_pairs(self) -> int:
        return len(self.pair_axes)

    @property
    def rotated_channels(self) -> int:
        return 2 * self.num_pairs

    def axis_pairs(self, axis: int) -> list[int]:
        """Pair indices ``I_a`` rotated by coordinate ``axis``."""
        return [r for r, a in enumerate(self.pair_axes) if a == axis]


def build_rope_config(dim: int, head_dim: int, h: float, diameter: float) -> RopeConfig:
    """Geometric ladder from ``2 pi / h`` down to ``2 pi / diameter``.

    The lowest frequency is capped at half the highest so the ladder stays
    strictly decreasing on meshes coarser than their own diameter.
    """
    if h <= 0:
        raise RopeConfigError(f"mesh size h must be positive, got {h}")
    per_axis = head_dim // (2 * dim)
    if per_axis == 0:
        raise RopeConfigError(
            f"head width {head_dim} leaves no channel pair for {dim} axes"
        )
    omega_max = 2.0 * math.pi / h
    omega_min = min(2.0 * math.pi / max(diameter, h), 0.5 * omega_max)
    if per_axis == 1:
        ladder = np.array([omega_max])
    else:
        gamma = (omega_min / omega_max) ** (1.0 / (per_axis - 1))
        ladder = omega_max * gamma ** np.arange(per_axis)
    pairs = range(per_axis * dim)
    return RopeConfig(
        dim=dim,
        head_dim=head_dim,
        pair_axes=tuple(r % dim for r in pairs),
        pair_frequencies=tuple(float(ladder[r // dim]) for r in pairs),
    )


def rotation_angles(centered_positions: torch.Tensor, cfg: RopeConfig) -> torch.Tensor:
    """``N x P`` angles ``omega_r * p_{i, axis(r)}``."""
    if centered_positions.shape[-1] != cfg.dim:
        raise RopeConfigError(
            f"positions have {centered_positions.shape[-1]} axes, config expects {cfg.dim}"
        )
    axes = torch.as_tensor(cfg.pair_axes, dtype=torch.long)
    freqs = torch.as_tensor(cfg.pair_frequencies, dtype=centered_positions.dtype)
    coordinates = ops.gather(centered_positions, axes, axis=-1)
    return ops.mul(coordinates, freqs)


def apply_rope(
    x: torch.Tensor, centered_positions: torch.Tensor, cfg: RopeConfig
) -> torch.Tensor:
    """Rotate the channel pairs of ``x`` (``... x N x head_dim``) per node.

    Each pair is turned by an orthogonal 2x2 rotation, so pair norms are
    preserved and ``<R_i q, R_j k>`` depends only on ``p_j - p_i``.
    """
    if x.shape[-1] != cfg.head_dim:
        raise RopeConfigError(
            f"input head width {x.shape[-1]} does not match config {cfg.head_dim}"
        )
    if cfg.num_pairs == 0:
        return x
    angles = rotation_angles(centered_positions.to(x.dtype), cfg)
    cos, sin = torch.cos(angles), torch.sin(angles)

    rotated = ops.slice_axis(x, 0, cfg.rotated_channels, axis=-1)
    paired = rotated.reshape(*rotated.shape[:-1], cfg.num_pairs, 2)
    even, odd = paired[..., 0], paired[..., 1]
    new_even = ops.sub(ops.mul(even, cos), ops.mul(odd, sin))
    new_odd = ops.add(ops.mul(even, sin), ops.mul(odd, cos))
    turned = torch.stack([new_even, new_odd], dim=-1).reshape(rotated.shape)

    if cfg.rotated_channels == cfg.head_dim:
        return turned
    rest = ops.slice_axis(x, cfg.rotated_channels, cfg.head_dim, axis=-1)
    return ops.concat([turned, rest], axis=-1)
