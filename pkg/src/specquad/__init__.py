"""Randomized quadrature approximations of spectral distributions and spectral sums."""

from .estimator import (
    DomainError,
    EstimateConfig,
    EstimateReport,
    FunctionSpec,
    estimate_spectrum,
    heat_capacity,
    report_to_json,
    spectral_sum,
)
from .measures import DiscreteDistribution, SeriesDistribution, SmoothedDistribution, wasserstein
from .moments import ModifiedMoments, chebyshev_moments, lanczos, modified_moments
from .operators import LinearOperator, load_matrix_market
from .orthopoly import ChebyshevT, ChebyshevU, Mixture, connection_coefficients, parse_measure
from .quadrature import (
    approx_quad_by_approximation,
    gaussian_quadrature,
    jackson_coefficients,
    quad_by_approximation,
    quad_by_interpolation,
)
from .tridiag import JacobiMatrix, symtrid_eigen

__version__ = "0.1.0"

__all__ = [
    "ChebyshevT",
    "ChebyshevU",
    "DiscreteDistribution",
    "DomainError",
    "EstimateConfig",
    "EstimateReport",
    "FunctionSpec",
    "JacobiMatrix",
    "LinearOperator",
    "Mixture",
    "ModifiedMoments",
    "SeriesDistribution",
    "SmoothedDistribution",
    "approx_quad_by_approximation",
    "chebyshev_moments",
    "connection_coefficients",
    "estimate_spectrum",
    "gaussian_quadrature",
    "heat_capacity",
    "jackson_coefficients",
    "lanczos",
    "load_matrix_market",
    "modified_moments",
    "parse_measure",
    "quad_by_approximation",
    "quad_by_interpolation",
    "report_to_json",
    "spectral_sum",
    "symtrid_eigen",
    "wasserstein",
]
