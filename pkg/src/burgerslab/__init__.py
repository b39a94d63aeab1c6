"""Numerical laboratory for reflected stochastic Burgers-type equations.

Desk-scale experiments around a semi-implicit finite-difference scheme with
exact discrete reflection bookkeeping: rare-event estimation with and
without a Girsanov tilt, rate-function recovery by control optimization,
and coupled-path averaging studies for fast-oscillation coefficients.
"""

from .core import (
    NoisePath,
    PathDistance,
    SpatialGrid,
    TimeMesh,
    exp_weighted_sup,
    h_norm,
    path_distance,
    sample_noise,
    sine_field,
    v_norm,
)
from .coefficients import (
    AuditReport,
    AveragedCoefficientSet,
    CoefficientSet,
    SampleBox,
    audit_assumptions,
    average_coefficients,
    burgers_multiscale_family,
    estimate_kappa,
    make_burgers_set,
    make_multiscale_set,
)
from .solver import (
    BlowUpError,
    Control,
    ReflectedPath,
    SchemeConfig,
    complementarity_residual,
    energy_functional,
    solve,
    solve_skeleton,
    step,
    total_variation_k,
)
from .ratefn import (
    LevelSetSample,
    RateFunctionResult,
    RateOptions,
    level_set_continuity_probe,
    rate_function,
    sample_level_set,
)
from .ldp import (
    EventSpec,
    RareEventEstimate,
    condition_convergence_probe,
    estimate_importance,
    estimate_naive,
    fw_lower_bound_probe,
)
from .averaging import (
    AveragingReport,
    increment_modulus,
    khasminskii_block_error,
    penalization_convergence_probe,
    run_averaging_experiment,
)

__version__ = "0.1.0"
