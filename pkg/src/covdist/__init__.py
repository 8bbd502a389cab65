"""Deterministic equivalents of plug-in distances between sample covariance matrices."""

from .detequiv import (
    DetEquivBreakdown,
    alpha_coefficient,
    beta_coefficients,
    comparison_det_equiv,
    le_det_equiv,
    population_distance,
    theta_matrix,
)
from .empirical import MonteCarloStats, matrix_log_extended, monte_carlo, plugin_distance, sample_scm
from .errors import ConfigError, CovDistError, DomainError, ModelError, NumericalError
from .rmt import MuRoots, gamma_fn, mu_roots, psi_fn, solve_omega, support_edges
from .spectrum import (
    CovarianceModel,
    OverlapMatrix,
    SpectralModel,
    diagonal_model,
    haar_basis,
    make_spectral_model,
    multiplicities_from_fractions,
    projector_overlaps,
    spectral_model_from_dense,
    toeplitz_covariance,
    with_haar_basis,
)
from .special import li2, phi2

__version__ = "0.1.0"
