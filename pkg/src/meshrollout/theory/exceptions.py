"""Custom exceptions for the numerical verification suite."""

from typing import Optional

from meshrollout.exceptions import MeshRolloutError


class TheoryError(MeshRolloutError):
    """Base exception for numerical verification."""


class DegenerateStencilError(TheoryError):
    """Raised when a WLS moment matrix is (numerically) singular."""

    def __init__(
        self,
        node: Optional[int],
        min_eigenvalue: float,
        tolerance: float,
        details: Optional[str] = None,
    ):
        """Initialize with the node, its smallest eigenvalue and the tolerance."""
        where = "stencil" if node is None else f"stencil of node {node}"
        super().__init__(
            f"Degenerate {where}: min eigenvalue {min_eigenvalue:.3e} "
            f"<= tolerance {tolerance:.3e}",
            details,
        )
        self.node = node
        self.min_eigenvalue = min_eigenvalue
        self.tolerance = tolerance


class PoleError(TheoryError):
    """Raised when ``1 - theta z`` vanishes."""

    def __init__(self, theta: float, z: complex, details: Optional[str] = None):
        """Initialize with the offending theta and z."""
        super().__init__(f"R_theta has a pole at theta={theta}, z={z}", details)
        self.theta = theta
        self.z = z
