"""Symmetric tridiagonal (Jacobi) matrices and their eigendecompositions."""

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
    "JacobiMatrix",
    "TridiagEigen",
    "ConvergenceError",
    "symtrid_eigen",
    "orthopoly_eval",
    "chebyshev_T_jacobi",
    "chebyshev_U_jacobi",
]

# relative size below which an off-diagonal entry is treated as zero
DEFLATION_TOL = 1e-14


class ConvergenceError(RuntimeError):
    """The tridiagonal QL iteration did not converge."""


@dataclass(frozen=True, eq=False)
class JacobiMatrix:
    """Recurrence coefficients of an orthonormal polynomial family.

    ``alphas`` is the diagonal (length m) and ``betas`` the positive
    off-diagonal, of length m - 1, or m when the extended (m+1) x m block is
    carried. ``invariant`` marks a Lanczos run that stopped on an invariant
    subspace, so the matrix describes its measure exactly.
    """

    alphas: np.ndarray
    betas: np.ndarray
    invariant: bool = False

    def __post_init__(self):
        alphas = np.array(self.alphas, dtype=float).reshape(-1)
        betas = np.array(self.betas, dtype=float).reshape(-1)
        m = alphas.size
        if m < 1:
            raise ValueError("a Jacobi matrix needs order >= 1")
        if betas.size not in (m - 1, m):
            raise ValueError(
                f"order {m} needs {m - 1} or {m} off-diagonal entries, got {betas.size}"
            )
        if not np.all(np.isfinite(alphas)) or not np.all(np.isfinite(betas)):
            raise ValueError("Jacobi entries must be finite")
        if np.any(betas <= 0):
            raise ValueError("off-diagonal entries must be strictly positive")
        alphas.flags.writeable = False
        betas.flags.writeable = False
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "betas", betas)

    @property
    def order(self):
        return self.alphas.size

    @property
    def extended(self):
        """True when the trailing off-diagonal entry beta_{m-1} is carried."""
        return self.betas.size == self.alphas.size

    def block(self, m):
        """Leading m x m block."""
        if m > self.order:
            raise ValueError(f"requested order {m} exceeds available order {self.order}")
        return JacobiMatrix(self.alphas[:m], self.betas[: m - 1])

    def extended_block(self, m):
        """Leading (m+1) x m block, keeping beta_{m-1}."""
        if m > self.order or (m == self.order and not self.extended):
            raise ValueError(f"extended block of order {m} not available")
        return JacobiMatrix(self.alphas[:m], self.betas[:m])

    def to_dense(self):
        """Dense matrix; shape (m+1, m) when extended."""
        m = self.order
        T = np.zeros((m + self.extended, m))
        T[np.arange(m), np.arange(m)] = self.alphas
        k = np.arange(self.betas.size)
        T[k + 1, k] = self.betas
        T[k[: m - 1], k[: m - 1] + 1] = self.betas[: m - 1]
        return T

    def norm_estimate(self):
        """Cheap upper bound on the 2-norm of the square block."""
        b = np.concatenate([[0.0], self.betas[: self.order - 1], [0.0]])
        return float(np.max(np.abs(self.alphas) + b[:-1] + b[1:]))


@dataclass(frozen=True, eq=False)
class TridiagEigen:
    """Eigenvalues (ascending) and first eigenvector components (>= 0).

    ``vectors`` holds the full eigenvector matrix (columns) when requested.
    """

    eigenvalues: np.ndarray
    first_components: np.ndarray
    vectors: np.ndarray = None


def _implicit_ql(d, e, z=None, max_sweeps=None):
    """Implicit-shift QL on a symmetric tridiagonal matrix, in place.

    ``d`` (length m) and ``e`` (length m, with e[i] coupling i and i+1 and
    e[m-1] unused) are python lists. Plane rotations are accumulated into the
    rows of ``z`` if given (rows index vector components of the transposed
    eigenvector matrix). Returns the rotated first row as a list.
    """
    m = len(d)
    scale = max(abs(x) for x in d)
    scale = max(scale, max((abs(x) for x in e), default=0.0))
    floor = DEFLATION_TOL * scale
    eps = np.finfo(float).eps
    if max_sweeps is None:
        max_sweeps = 50 * m
    first = [0.0] * m
    first[0] = 1.0
    sweeps = 0
    for l in range(m):
        while True:
            k = l
            while k < m - 1:
                if abs(e[k]) <= max(floor, eps * (abs(d[k]) + abs(d[k + 1]))):
                    break
                k += 1
            if k == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise ConvergenceError(f"QL iteration exceeded {max_sweeps} sweeps")
            # Wilkinson shift from the leading 2x2 block
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[k] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = k - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[k] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                f = first[i + 1]
                first[i + 1] = s * first[i] + c * f
                first[i] = c * first[i] - s * f
                if z is not None:
                    zi = z[i]
                    zf = z[i + 1].copy()
                    z[i + 1] = s * zi + c * zf
                    z[i] = c * zi - s * zf
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[k] = 0.0
    return first


def symtrid_eigen(J, vectors=False):
    """Eigendecomposition of the square block of a Jacobi matrix.

    Parameters
    ----------
    J : JacobiMatrix
        Only the leading m x m block is used, even if ``J`` is extended.
    vectors : bool
        Also return the full orthonormal eigenvector matrix.

    Returns
    -------
    TridiagEigen
        Ascending eigenvalues and first eigenvector components, the latter
        sign-normalized to be nonnegative.
    """
    m = J.order
    d = [float(x) for x in J.alphas]
    e = [float(x) for x in J.betas[: m - 1]] + [0.0]
    z = np.eye(m) if vectors else None
    first = np.array(_implicit_ql(d, e, z))
    theta = np.array(d)
    order = np.argsort(theta, kind="stable")
    theta = theta[order]
    first = first[order]
    signs = np.where(first < 0, -1.0, 1.0)
    V = None
    if vectors:
        # z rows are the eigenvectors
        V = (z[order] * signs[:, None]).T.copy()
    return TridiagEigen(theta, np.abs(first), V)


def orthopoly_eval(J, x, s):
    """Orthonormal polynomials p_0..p_s of ``J`` evaluated at ``x``.

    Uses x p_i = beta_{i-1} p_{i-1} + alpha_i p_i + beta_i p_{i+1}. The result
    has shape (s+1,) + shape(x).
    """
    if s < 0:
        raise ValueError("degree must be nonnegative")
    if J.alphas.size < s or J.betas.size < s:
        raise ValueError(f"Jacobi matrix of order {J.order} too small for degree {s}")
    x = np.asarray(x, dtype=float)
    P = np.empty((s + 1,) + x.shape)
    P[0] = 1.0
    a, b = J.alphas, J.betas
    for i in range(s):
        prev = b[i - 1] * P[i - 1] if i > 0 else 0.0
        P[i + 1] = ((x - a[i]) * P[i] - prev) / b[i]
    return P


def _check_interval(a, b):
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")


def chebyshev_T_jacobi(a, b, m, extended=False):
    """Jacobi matrix of the Chebyshev measure of the first kind on [a, b]."""
    _check_interval(a, b)
    nb = m if extended else m - 1
    betas = np.full(nb, (b - a) / 4.0)
    if nb > 0:
        betas[0] = (b - a) / (2.0 * math.sqrt(2.0))
    return JacobiMatrix(np.full(m, (a + b) / 2.0), betas)


def chebyshev_U_jacobi(a, b, m, extended=False):
    """Jacobi matrix of the Chebyshev measure of the second kind on [a, b]."""
    _check_interval(a, b)
    nb = m if extended else m - 1
    return JacobiMatrix(np.full(m, (a + b) / 2.0), np.full(nb, (b - a) / 4.0))
