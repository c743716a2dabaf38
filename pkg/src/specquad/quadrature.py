"""Quadrature rules and series approximations built from moments."""

import math
import warnings

import numpy as np

from .measures import DiscreteDistribution, SeriesDistribution
from .moments import ModifiedMoments
from .tridiag import orthopoly_eval, symtrid_eigen

__all__ = [
    "TruncationWarning",
    "quad_by_interpolation",
    "gaussian_quadrature",
    "quad_by_approximation",
    "approx_quad_by_approximation",
    "jackson_coefficients",
    "apply_damping",
]


class TruncationWarning(UserWarning):
    """aaq was asked for fewer Gauss nodes than moments; high moments are dropped."""


def quad_by_interpolation(m):
    """Interpolatory rule on the zeros of p_{s+1} matching m_0..m_s.

    Weights are diag(S[0, :]) S^T m with S the eigenvectors of the order s+1
    Jacobi matrix of the reference measure; they can be negative.
    """
    s = m.degree
    eig = symtrid_eigen(m.measure.jacobi(s + 1), vectors=True)
    S = eig.vectors
    return DiscreteDistribution(eig.eigenvalues, S[0] * (S.T @ m.values))


def gaussian_quadrature(T):
    """Gauss rule of a Jacobi matrix: eigenvalues and squared first components."""
    eig = symtrid_eigen(T.block(T.order))
    return DiscreteDistribution(eig.eigenvalues, eig.first_components**2)


def quad_by_approximation(m):
    """Series distribution with density dmu/dx * sum_i m_i p_i."""
    return SeriesDistribution(m.measure, m.values)


def approx_quad_by_approximation(m, d=None):
    """Discretize the series approximation on the d-point Gauss rule of mu.

    The weight at Gauss node theta_j is w_j sum_i m_i p_i(theta_j), which equals
    diag(S[0, :]) S[:s+1, :]^T m. ``d`` defaults to 8(s+1); with d = s+1 this
    is the interpolatory rule.
    """
    if isinstance(m, SeriesDistribution):
        m = ModifiedMoments(m.measure, m.coeffs)
    s = m.degree
    if d is None:
        d = 8 * (s + 1)
    if d < 1:
        raise ValueError("need at least one node")
    values = m.values
    if d < s + 1:
        warnings.warn(
            f"aaq with d={d} < s+1={s + 1} drops moments above degree {d - 1}",
            TruncationWarning,
            stacklevel=2,
        )
        values = values[:d]
    rule = m.measure.gauss_rule(d)
    P = orthopoly_eval(m.measure.jacobi(values.size), rule.nodes, values.size - 1)
    return DiscreteDistribution(rule.nodes, rule.weights * (values @ P))


def jackson_coefficients(s):
    """Jackson damping factors rho_0..rho_s."""
    if s < 0:
        raise ValueError("degree must be nonnegative")
    i = np.arange(s + 1)
    t = np.pi / (s + 2)
    return ((s - i + 2) * np.cos(i * t) + np.sin(i * t) / math.tan(t)) / (s + 2)


def apply_damping(m, rho):
    """Replace m_i by rho_i m_i."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != m.values.shape:
        raise ValueError(f"damping has length {rho.size}, moments have {m.values.size}")
    return ModifiedMoments(m.measure, rho * m.values)
