"""Random-matrix corrected estimators of spectral functionals and covariance distances."""

from __future__ import annotations

__version__ = "0.1.0"

from .distances import DistanceKind, DistanceName, distance, population_distance
from .dilog import f_integral, li2, li2_array
from .errors import (
    BracketFailure,
    CaseError,
    ContourThroughPole,
    DimensionMismatch,
    DomainError,
    FactorizationFailure,
    NonFinite,
    NonPositiveEigenvalue,
    PoleHit,
    SingularC1,
    SpecDistError,
)
from .estimators import (
    ContourConfig,
    EstimateReport,
    FunctionalSpec,
    Kind,
    Method,
    classical_plugin,
    est_contour,
    est_identity,
    est_log,
    est_log1p,
    est_log1p_c2gt1,
    est_log2_approx,
    est_log2_exact,
    estimate,
    find_kappa0,
)
from .simharness import ExperimentConfig, Field, MethodSummary, TrialSummary, run_experiment
from .spectral import (
    SpectralModel,
    SupportPoints,
    known_c1_eigenvalues,
    phi,
    phi_prime,
    psi,
    psi_prime,
    sample_eigenvalues,
    stieltjes,
    stieltjes_prime,
    support_points,
)

__all__ = [
    "__version__",
    "BracketFailure", "CaseError", "ContourThroughPole", "DimensionMismatch", "DomainError",
    "FactorizationFailure", "NonFinite", "NonPositiveEigenvalue", "PoleHit", "SingularC1",
    "SpecDistError",
    "SpectralModel", "SupportPoints", "sample_eigenvalues", "known_c1_eigenvalues",
    "stieltjes", "stieltjes_prime", "phi", "psi", "phi_prime", "psi_prime", "support_points",
    "li2", "li2_array", "f_integral",
    "Kind", "Method", "FunctionalSpec", "EstimateReport", "ContourConfig",
    "est_identity", "est_log", "find_kappa0", "est_log1p", "est_log1p_c2gt1",
    "est_log2_exact", "est_log2_approx", "est_contour", "classical_plugin", "estimate",
    "DistanceKind", "DistanceName", "distance", "population_distance",
    "ExperimentConfig", "Field", "MethodSummary", "TrialSummary", "run_experiment",
]
