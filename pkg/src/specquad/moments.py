"""Krylov moment extraction: recurrences, Chebyshev doubling and Lanczos."""

from dataclasses import dataclass
import math

import numpy as np
from scipy.linalg.blas import daxpy

from .orthopoly import ChebyshevT, ReferenceMeasure, connection_coefficients
from .tridiag import JacobiMatrix, chebyshev_T_jacobi

__all__ = [
    "ModifiedMoments",
    "lanczos",
    "modified_moments",
    "chebyshev_moments",
    "moments_from_cheb",
    "moments_from_lanczos",
]

# relative breakdown threshold for Lanczos
BREAKDOWN_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class ModifiedMoments:
    """Moments m_i = int p_i dPsi against the orthonormal polynomials of ``measure``."""

    measure: ReferenceMeasure
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def degree(self):
        return self.values.size - 1

    def __len__(self):
        return self.values.size

    def truncate(self, s):
        return ModifiedMoments(self.measure, self.values[: s + 1])


def _axpy(a, x, y):
    """y += a * x in place without temporaries."""
    daxpy(x, y, a=a)


def _as_vector(A, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (A.dim,):
        raise ValueError(f"start vector must have shape ({A.dim},), got {v.shape}")
    return v


def lanczos(A, v, k, reorth=False, return_basis=False):
    """k steps of Lanczos on A started from v.

    Returns the extended (k+1) x k Jacobi matrix (beta_{k-1} retained). If some
    beta_i falls below 1e-14 times the running norm estimate, the run stops
    early and the order i+1 matrix is returned with ``invariant=True``.

    Reorthogonalization is full classical Gram-Schmidt, applied twice. With
    ``return_basis`` the Lanczos vectors are stored and returned as columns of
    a second output.
    """
    if k < 1:
        raise ValueError("need at least one Lanczos step")
    v = _as_vector(A, v)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("start vector must be nonzero")
    store = reorth or return_basis
    Q = np.empty((k + 1, A.dim)) if store else None
    q = v / nv
    q_prev = None
    alphas, betas = [], []
    scale = 0.0
    invariant = False
    for i in range(k):
        if store:
            Q[i] = q
        w = A.apply(q)
        if w is q:
            w = w.copy()
        if q_prev is not None:
            _axpy(-betas[-1], q_prev, w)
        a = float(np.dot(w, q))
        _axpy(-a, q, w)
        if reorth:
            for _ in range(2):
                h = Q[: i + 1] @ w
                w -= Q[: i + 1].T @ h
        b = float(np.linalg.norm(w))
        alphas.append(a)
        scale = max(scale, abs(a), b, betas[-1] if betas else 0.0)
        if b <= BREAKDOWN_TOL * scale:
            invariant = True
            break
        betas.append(b)
        w /= b
        q_prev, q = q, w
    T = JacobiMatrix(alphas, betas, invariant=invariant)
    if return_basis:
        return T, Q[: T.order].T.copy()
    return T


def modified_moments(A, v, k, mu):
    """Moments of the weighted spectral measure of (A, v) against mu through degree k.

    Runs q_{i+1} = (A q_i - alpha_i q_i - beta_{i-1} q_{i-1}) / beta_i with the
    recurrence coefficients of mu and sets m_i = v^T q_i; k matvecs and three
    working vectors.
    """
    v = _as_vector(A, v)
    out = np.empty(k + 1)
    out[0] = np.dot(v, v)
    if k == 0:
        return ModifiedMoments(mu, out)
    J = mu.jacobi(k + 1)
    alpha, beta = J.alphas, J.betas
    q_prev, q = None, v
    for i in range(k):
        w = A.apply(q)
        if w is q:
            w = w.copy()
        _axpy(-alpha[i], q, w)
        if q_prev is not None:
            _axpy(-beta[i - 1], q_prev, w)
        w /= beta[i]
        out[i + 1] = np.dot(v, w)
        q_prev, q = q, w
    return ModifiedMoments(mu, out)


def chebyshev_moments(A, v, k, a, b):
    """Chebyshev moments against mu^T_{a,b} through degree 2k from k matvecs.

    Uses T_{2i} = 2 T_i^2 - 1 and T_{2i+1} = 2 T_i T_{i+1} - T_1. Nothing guards
    against spectra outside [a, b], where the moments grow rapidly.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    v = _as_vector(A, v)
    mu = ChebyshevT(a, b)
    r2 = math.sqrt(2.0)
    c = 0.5 * (a + b)
    h = 2.0 / (b - a)
    out = np.empty(2 * k + 1)
    m0 = float(np.dot(v, v))
    out[0] = m0
    if k == 0:
        return ModifiedMoments(mu, out)
    # q_i = T_i(A~) v with A~ = h (A - c I)
    q_prev = v
    q = A.apply(v)
    if q is v:
        q = q.copy()
    _axpy(-c, v, q)
    q *= h
    m1 = r2 * float(np.dot(v, q))
    out[1] = m1
    for i in range(1, k):
        out[2 * i] = r2 * (2.0 * np.dot(q, q) - m0)
        w = A.apply(q)
        if w is q:
            w = w.copy()
        _axpy(-c, q, w)
        w *= 2.0 * h
        _axpy(-1.0, q_prev, w)
        out[2 * i + 1] = r2 * 2.0 * np.dot(q, w) - m1
        q_prev, q = q, w
    out[2 * k] = r2 * (2.0 * np.dot(q, q) - m0)
    return ModifiedMoments(mu, out)


def moments_from_cheb(A, v, s, mu, a, b):
    """Moments against mu through degree s via Chebyshev moments on [a, b].

    The Chebyshev moments n are transported with m = C^T n where C connects
    mu to mu^T_{a,b}.
    """
    k = (s + 1) // 2
    n = chebyshev_moments(A, v, k, a, b).values[: s + 1]
    if mu == ChebyshevT(a, b):
        return ModifiedMoments(mu, n)
    C = connection_coefficients(mu.jacobi(s + 1), chebyshev_T_jacobi(a, b, s + 1, extended=True), s)
    return ModifiedMoments(mu, C.T @ n)


def moments_from_lanczos(A, v, s, mu, reorth=False):
    """Moments against mu through degree s from ceil(s/2) Lanczos steps.

    m_i is the first row of the connection matrix from mu to the measure of
    the Lanczos Jacobi matrix. If Lanczos stops on an invariant subspace the
    weighted measure is represented exactly and all moments are exact.
    """
    v = _as_vector(A, v)
    k = max(1, (s + 1) // 2)
    T = lanczos(A, v, k, reorth=reorth)
    C = connection_coefficients(mu.jacobi(s + 1), T, s, band=s)
    return ModifiedMoments(mu, float(np.dot(v, v)) * C[0])
