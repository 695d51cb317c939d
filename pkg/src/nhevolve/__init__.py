"""Simulation and prediction toolkit for slow non-Hermitian evolution.

Integrates the exact time-ordered dynamics of small time-dependent
non-Hermitian Hamiltonians, evaluates the noiseless and noise-aware
analytical predictors for the instantaneous-eigenbasis populations, and
classifies state-conversion outcomes (winner branch, switch times,
chirality of closed parameter loops).
"""

from .bench import (
    ChiralityVerdict,
    ConversionReport,
    PRESETS,
    chirality,
    classify_endpoint_fastest,
    classify_most_growing,
    detect_switch_times,
    run_preset,
)
from .errors import (
    ArgumentError,
    BranchAmbiguityError,
    ConfigError,
    ConvergenceError,
    IndeterminateEndpointError,
    MagnitudeError,
    NearEPError,
    NhevolveError,
    PhysicsError,
    SingularMatrixError,
    UsageError,
)
from .evolve import StateHistory, extract_populations, propagate, reference_propagate
from .matlin import EigenDecomposition, eig_general, mat_exp, mat_inv, mat_mul
from .models import (
    HamiltonianPath,
    PerturbationSpec,
    TrajectorySpec,
    closed_form_eigvals,
    sample_h,
    sample_perturbation,
    slowness_diagnostic,
)
from .predict import PredictionSeries, advanced_series, delta_h_tilde, naive_series
from .spectral import SpectralFrame, build_frame, compute_w1, compute_x1, cumulative_lambda

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "BranchAmbiguityError",
    "ChiralityVerdict",
    "ConfigError",
    "ConversionReport",
    "ConvergenceError",
    "EigenDecomposition",
    "HamiltonianPath",
    "IndeterminateEndpointError",
    "MagnitudeError",
    "NearEPError",
    "NhevolveError",
    "PRESETS",
    "PerturbationSpec",
    "PhysicsError",
    "PredictionSeries",
    "SingularMatrixError",
    "SpectralFrame",
    "StateHistory",
    "TrajectorySpec",
    "UsageError",
    "advanced_series",
    "build_frame",
    "chirality",
    "classify_endpoint_fastest",
    "classify_most_growing",
    "closed_form_eigvals",
    "compute_w1",
    "compute_x1",
    "cumulative_lambda",
    "delta_h_tilde",
    "detect_switch_times",
    "eig_general",
    "extract_populations",
    "mat_exp",
    "mat_inv",
    "mat_mul",
    "naive_series",
    "propagate",
    "reference_propagate",
    "run_preset",
    "sample_h",
    "sample_perturbation",
    "slowness_diagnostic",
]
