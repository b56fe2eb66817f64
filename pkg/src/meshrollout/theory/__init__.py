"""Numerical checks: WLS gradients, the discrete H1 bound and theta-method stability."""

from .exceptions import DegenerateStencilError, PoleError, TheoryError
from .h1_bound import (
    BoundSample,
    H1BoundReport,
    PatchPerturbation,
    h1_bound_check,
    loglog_slope,
    quadratic_gradient_errors,
    sine_field,
    sine_gradient,
)
from .stability import (
    StabilityGrid,
    amplification,
    amplification_array,
    count_violations,
    forward_euler_matches,
    identity_check,
    identity_sweep,
    stability_region,
)
from .suite import (
    CheckResult,
    VerificationReport,
    affine_exactness,
    assumption_sandwich,
    run_verification_suite,
    write_tables,
)
from .wls import (
    AssumptionReport,
    WeightScheme,
    WlsOperator,
    WlsStencil,
    build_stencil,
    check_assumption,
    stencil_weights,
    wls_gradient,
)

__all__ = [
    # Models
    "WlsStencil",
    "WlsOperator",
    "WeightScheme",
    "AssumptionReport",
    "StabilityGrid",
    "BoundSample",
    "H1BoundReport",
    "PatchPerturbation",
    "CheckResult",
    "VerificationReport",
    # Operations
    "stencil_weights",
    "build_stencil",
    "wls_gradient",
    "check_assumption",
    "amplification",
    "amplification_array",
    "stability_region",
    "count_violations",
    "forward_euler_matches",
    "identity_check",
    "identity_sweep",
    "sine_field",
    "sine_gradient",
    "h1_bound_check",
    "loglog_slope",
    "quadratic_gradient_errors",
    "affine_exactness",
    "assumption_sandwich",
    "run_verification_suite",
    "write_tables",
    # Exceptions
    "TheoryError",
    "DegenerateStencilError",
    "PoleError",
]
