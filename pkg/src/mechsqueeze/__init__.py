"""Squeezing of a parametrically driven, continuously measured mechanical oscillator."""

__version__ = "0.1.0"

from .analytic import AnalyticOptimum, analytic_optimum, analytic_vx, no_measurement_optimum
from .dynamics import (
    EnsembleSummary,
    TrajectoryRecord,
    integrate_riccati,
    refilter,
    relax_riccati,
    simulate_ensemble,
    simulate_trajectory,
)
from .errors import (
    NoConvergence,
    NoStableDetuning,
    NumericalError,
    ParameterError,
    PhysicsDomainError,
    SqueezeError,
    UnstableParameters,
)
from .model import PhysicalParams, SystemParams, derived, from_db, is_stable, to_db, validate
from .optimize import OptimizationResult, optimal_detuning, optimal_measurement
from .steadystate import (
    CovarianceState,
    bae_threshold_n,
    bae_variance,
    conditional_steady_state,
    lyapunov_steady_state,
    principal_variances,
    unconditional_steady_state,
    v0,
)

__all__ = [
    "AnalyticOptimum",
    "CovarianceState",
    "EnsembleSummary",
    "NoConvergence",
    "NoStableDetuning",
    "NumericalError",
    "OptimizationResult",
    "ParameterError",
    "PhysicalParams",
    "PhysicsDomainError",
    "SqueezeError",
    "SystemParams",
    "TrajectoryRecord",
    "UnstableParameters",
    "analytic_optimum",
    "analytic_vx",
    "bae_threshold_n",
    "bae_variance",
    "conditional_steady_state",
    "derived",
    "from_db",
    "integrate_riccati",
    "is_stable",
    "lyapunov_steady_state",
    "no_measurement_optimum",
    "optimal_detuning",
    "optimal_measurement",
    "principal_variances",
    "refilter",
    "relax_riccati",
    "simulate_ensemble",
    "simulate_trajectory",
    "to_db",
    "unconditional_steady_state",
    "v0",
    "validate",
]
