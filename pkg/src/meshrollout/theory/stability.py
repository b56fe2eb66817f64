"""Amplification factor and stability region of the theta-method."""

from dataclasses import dataclass

import numpy as np

from .exceptions import PoleError


def amplification(theta: float, z: complex) -> complex:
    """``R_theta(z) = (1 + (1 - theta) z) / (1 - theta z)``."""
    denominator = 1.0 - theta * z
    if denominator == 0:
        raise PoleError(theta, z)
    return (1.0 + (1.0 - theta) * z) / denominator


def amplification_array(theta: float, z: np.ndarray) -> np.ndarray:
    """Vectorized :func:`amplification`; poles raise."""
    denominator = 1.0 - theta * z
    if np.any(denominator == 0):
        raise PoleError(theta, complex(z[denominator == 0].flat[0]))
    return (1.0 + (1.0 - theta) * z) / denominator


@dataclass(frozen=True, eq=False)
class StabilityGrid:
    """Samples ``z = dt * lambda`` over ``[-L, 0] x [-L, L]``."""

    z: np.ndarray
    extent: float

    @classmethod
    def left_half_plane(cls, extent: float = 8.0, resolution: int = 401) -> "StabilityGrid":
        real = np.linspace(-extent, 0.0, resolution)
        imag = np.linspace(-extent, extent, resolution)
        re, im = np.meshgrid(real, imag, indexing="xy")
        return cls(z=re + 1j * im, extent=extent)


def stability_region(theta: float, grid: StabilityGrid, tolerance: float = 0.0) -> np.ndarray:
    """Boolean mask ``|R_theta(z)| <= 1 + tolerance`` over the grid."""
    return np.abs(amplification_array(theta, grid.z)) <= 1.0 + tolerance


def count_violations(theta: float, grid: StabilityGrid, tolerance: float = 1e-12) -> int:
    """Grid points with ``Re z <= 0`` where ``|R_theta| > 1 + tolerance``."""
    left = grid.z.real <= 0
    return int(np.count_nonzero(~stability_region(theta, grid, tolerance) & left))


def forward_euler_matches(grid: StabilityGrid) -> bool:
    """Whether the theta = 0 region equals the disk ``|1 + z| <= 1`` on the grid."""
    return bool(
        np.array_equal(stability_region(0.0, grid), np.abs(1.0 + grid.z) <= 1.0)
    )


def identity_check(theta: float, z: complex) -> float:
    """Residual of ``|1 - theta z|^2 - |1 + (1 - theta) z|^2 = -2a + (2 theta - 1)(a^2 + b^2)``."""
    a, b = z.real, z.imag
    denominator = abs(1.0 - theta * z) ** 2
    numerator = abs(1.0 + (1.0 - theta) * z) ** 2
    closed_form = -2.0 * a + (2.0 * theta - 1.0) * (a * a + b * b)
    return abs(denominator - numerator - closed_form)


def identity_sweep(draws: int = 10_000, seed: int = 0, extent: float = 4.0) -> float:
    """Max :func:`identity_check` residual over random ``theta`` and ``z``."""
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0.0, 1.0, draws)
    zs = rng.uniform(-extent, extent, draws) + 1j * rng.uniform(-extent, extent, draws)
    return max(identity_check(float(t), complex(z)) for t, z in zip(thetas, zs))
