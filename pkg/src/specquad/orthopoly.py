"""Reference measures, their Gauss rules, and connection coefficients."""

import math
import re
import threading

import numpy as np

from .measures import DiscreteDistribution
from .tridiag import (
    JacobiMatrix,
    chebyshev_T_jacobi,
    chebyshev_U_jacobi,
    orthopoly_eval,
    symtrid_eigen,
)

__all__ = [
    "ReferenceMeasure",
    "ChebyshevT",
    "ChebyshevU",
    "Atom",
    "Mixture",
    "mixture_measure",
    "measure_gauss_rule",
    "stieltjes_from_discrete",
    "connection_coefficients",
    "parse_measure",
]


class ReferenceMeasure:
    """Unit-mass measure mu with orthonormal polynomials p_0, p_1, ...

    Subclasses provide ``jacobi``, ``cdf``, ``density``, ``partial_integrals``
    and ``support``. ``cap`` is the largest valid Jacobi order (None when
    unbounded).
    """

    cap = None

    def jacobi(self, m, extended=False):
        raise NotImplementedError

    def polys(self, x, s):
        """p_0..p_s at x, shape (s+1,) + shape(x)."""
        return orthopoly_eval(self.jacobi(s + 1), x, s)

    def gauss_rule(self, d):
        return measure_gauss_rule(self, d)

    def _gauss_rule(self, d):
        eig = symtrid_eigen(self.jacobi(d))
        return eig.eigenvalues, eig.first_components**2

    def breakpoints(self):
        return np.array(self.support)

    def _check_order(self, m):
        if m < 1:
            raise ValueError("Jacobi order must be at least 1")
        if self.cap is not None and m > self.cap:
            raise ValueError(f"order {m} exceeds the cap {self.cap} of {self!r}")


class _Interval(ReferenceMeasure):
    def __init__(self, a, b):
        a, b = float(a), float(b)
        if not a < b:
            raise ValueError(f"need a < b, got [{a}, {b}]")
        self.a, self.b = a, b

    @property
    def support(self):
        return (self.a, self.b)

    def _u(self, x):
        """Affine map of x onto [-1, 1]."""
        return (2.0 * np.asarray(x, dtype=float) - (self.a + self.b)) / (self.b - self.a)

    def _phi(self, x):
        return np.arccos(np.clip(self._u(x), -1.0, 1.0))

    def __eq__(self, other):
        return type(self) is type(other) and (self.a, self.b) == (other.a, other.b)

    def __hash__(self):
        return hash((type(self).__name__, self.a, self.b))

    def __repr__(self):
        return f"{self.tag}({self.a!r},{self.b!r})"


class ChebyshevT(_Interval):
    """Chebyshev measure of the first kind on [a, b]."""

    tag = "chebT"

    def jacobi(self, m, extended=False):
        self._check_order(m)
        return chebyshev_T_jacobi(self.a, self.b, m, extended)

    def cdf(self, x):
        return 0.5 + np.arcsin(np.clip(self._u(x), -1.0, 1.0)) / np.pi

    def density(self, x):
        u = self._u(x)
        inside = np.abs(u) < 1
        with np.errstate(divide="ignore", invalid="ignore"):
            val = 2.0 / (np.pi * (self.b - self.a) * np.sqrt(1.0 - u * u))
        return np.where(inside, val, np.where(np.abs(u) == 1, np.inf, 0.0))

    def partial_integrals(self, x, s):
        # int_{a}^{x} sqrt2 T_i dmu^T = -sqrt2 sin(i phi) / (i pi), phi = arccos(u)
        phi = self._phi(x)
        out = np.empty((s + 1,) + phi.shape)
        out[0] = 1.0 - phi / np.pi
        i = np.arange(1, s + 1).reshape((-1,) + (1,) * phi.ndim)
        out[1:] = -math.sqrt(2.0) * np.sin(i * phi) / (i * np.pi)
        return out

    def _gauss_rule(self, d):
        j = np.arange(d, 0, -1)
        nodes = 0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * np.cos((2 * j - 1) * np.pi / (2 * d))
        return nodes, np.full(d, 1.0 / d)


class ChebyshevU(_Interval):
    """Chebyshev measure of the second kind on [a, b]."""

    tag = "chebU"

    def jacobi(self, m, extended=False):
        self._check_order(m)
        return chebyshev_U_jacobi(self.a, self.b, m, extended)

    def cdf(self, x):
        phi = self._phi(x)
        return (np.pi - phi + 0.5 * np.sin(2.0 * phi)) / np.pi

    def density(self, x):
        u = self._u(x)
        return np.where(
            np.abs(u) <= 1,
            4.0 / (np.pi * (self.b - self.a)) * np.sqrt(np.clip(1.0 - u * u, 0.0, None)),
            0.0,
        )

    def partial_integrals(self, x, s):
        # U_i(cos phi) sin^2(phi) integrated over [phi, pi] with weight 2/pi
        phi = self._phi(x)
        out = np.empty((s + 1,) + phi.shape)
        out[0] = self.cdf(x)
        i = np.arange(1, s + 1).reshape((-1,) + (1,) * phi.ndim)
        out[1:] = (np.sin((i + 2) * phi) / (i + 2) - np.sin(i * phi) / i) / np.pi
        return out

    def _gauss_rule(self, d):
        j = np.arange(d, 0, -1)
        t = j * np.pi / (d + 1)
        nodes = 0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * np.cos(t)
        return nodes, 2.0 / (d + 1) * np.sin(t) ** 2


class Atom:
    """Point mass at z."""

    tag = "atom"

    def __init__(self, z):
        self.z = float(z)

    @property
    def support(self):
        return (self.z, self.z)

    def __repr__(self):
        return f"atom({self.z!r})"


class Mixture(ReferenceMeasure):
    """Weighted sum of Chebyshev-U intervals and point masses.

    Jacobi matrices come from the Stieltjes procedure applied to per-component
    Gauss rules of the requested order (atoms contribute a single node).
    """

    def __init__(self, components):
        comps = [(float(w), c) for w, c in components]
        if not comps:
            raise ValueError("mixture needs at least one component")
        for w, c in comps:
            if not w > 0:
                raise ValueError("mixture weights must be positive")
            if not isinstance(c, (ChebyshevU, Atom)):
                raise TypeError(f"unsupported mixture component {c!r}")
        total = sum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {total}, not 1")
        intervals = sorted((c.a, c.b) for _, c in comps if isinstance(c, ChebyshevU))
        for (_, b0), (a1, _) in zip(intervals, intervals[1:]):
            if a1 < b0:
                raise ValueError("mixture intervals overlap")
        self.components = comps
        self.intervals = [(w, c) for w, c in comps if isinstance(c, ChebyshevU)]
        self.atoms = [(w, c) for w, c in comps if isinstance(c, Atom)]
        if not self.intervals:
            self.cap = len({c.z for _, c in self.atoms})
        self._lock = threading.Lock()
        self._jac = None

    @property
    def support(self):
        lo = min(c.support[0] for _, c in self.components)
        hi = max(c.support[1] for _, c in self.components)
        return (lo, hi)

    def __repr__(self):
        terms = "+".join(f"{w!r}*{c!r}" for w, c in self.components)
        return f"mix({terms})"

    def _discretize(self, m):
        nodes, weights = [], []
        for w, c in self.intervals:
            x, q = c._gauss_rule(m)
            nodes.append(x)
            weights.append(w * q)
        for w, c in self.atoms:
            nodes.append([c.z])
            weights.append([w])
        return np.concatenate(nodes), np.concatenate(weights)

    def jacobi(self, m, extended=False):
        need = m + 1 if extended else m
        self._check_order(need)
        with self._lock:
            if self._jac is None or self._jac.order < need:
                nodes, weights = self._discretize(need)
                self._jac = stieltjes_from_discrete(nodes, weights, need)
            J = self._jac
        return J.extended_block(m) if extended else J.block(m)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for w, c in self.intervals:
            out += w * c.cdf(x)
        for w, c in self.atoms:
            out += w * (x >= c.z)
        return out

    def density(self, x):
        """Density of the absolutely continuous part."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for w, c in self.intervals:
            out += w * c.density(x)
        return out

    def partial_integrals(self, x, s, nquad=None):
        x = np.asarray(x, dtype=float)
        J = self.jacobi(s + 1)
        out = np.zeros((s + 1,) + x.shape)
        nq = nquad or s + 40
        gx, gw = np.polynomial.legendre.leggauss(nq)
        for w, c in self.intervals:
            # substitute t = mid + half*cos(phi); the integrand is smooth in phi
            phi0 = c._phi(x).reshape(-1)
            half = 0.5 * (np.pi - phi0)
            phi = (0.5 * (np.pi + phi0))[:, None] + half[:, None] * gx
            t = 0.5 * (c.a + c.b) + 0.5 * (c.b - c.a) * np.cos(phi)
            P = orthopoly_eval(J, t, s)
            integrand = P * (2.0 / np.pi) * np.sin(phi) ** 2
            out += w * ((integrand @ gw) * half).reshape((s + 1,) + x.shape)
        for w, c in self.atoms:
            p = orthopoly_eval(J, c.z, s)
            out += w * p.reshape((s + 1,) + (1,) * x.ndim) * (x >= c.z)
        return out

    def breakpoints(self):
        pts = [c.support for _, c in self.components]
        return np.unique(np.ravel(pts))


def mixture_measure(components):
    """Build a :class:`Mixture` from ``(weight, component)`` pairs."""
    return Mixture(components)


def measure_gauss_rule(mu, d):
    """d-point Gaussian quadrature rule of ``mu`` as a DiscreteDistribution."""
    mu._check_order(d)
    nodes, weights = mu._gauss_rule(d)
    return DiscreteDistribution(nodes, weights)


def stieltjes_from_discrete(nodes, weights, m):
    """Jacobi matrix of order m of the discrete measure sum_j w_j delta(x - x_j).

    Runs Lanczos with full reorthogonalization on diag(nodes) started from
    sqrt(weights).
    """
    from .moments import lanczos
    from .operators import diagonal_operator

    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0):
        raise ValueError("Stieltjes weights must be positive")
    T = lanczos(diagonal_operator(nodes), np.sqrt(weights), m, reorth=True)
    if T.order < m:
        raise ValueError(f"discrete measure supports only order {T.order} < {m}")
    return T.block(m)


def connection_coefficients(M_mu, M_nu, s, band=None):
    """Connection coefficients C with p_j = sum_i C[i, j] q_i.

    ``p`` are the orthonormal polynomials of ``M_mu`` and ``q`` those of
    ``M_nu``; C[i, j] = int q_i p_j dnu. Entries (i, j) with j <= s and
    i <= min(j, band - j) are computed; ``band = s`` gives exactly the entries
    needed for the first row through degree s. Entries outside that region but
    in the upper triangle are NaN. If ``M_nu`` is flagged invariant, its
    measure is finitely supported and is treated as exact at all degrees.

    Returns
    -------
    ndarray, shape (s+1, s+1)
    """
    if band is None:
        band = 2 * s
    alpha, beta = M_mu.alphas, M_mu.betas
    if s > 0 and (alpha.size < s or beta.size < s):
        raise ValueError(f"mu Jacobi matrix of order {M_mu.order} too small for degree {s}")
    # highest gamma / delta index touched by the computed region
    need_g = need_d = -1
    for j in range(1, s + 1):
        top = min(j, band - j)
        if top < 0:
            continue
        need_g = max(need_g, min(j - 1, top))
        need_d = max(need_d, top - 1, min(j - 2, top))
    gamma = np.zeros(s + 2)
    delta = np.zeros(s + 2)
    ng = min(M_nu.alphas.size, s + 2)
    nd = min(M_nu.betas.size, s + 2)
    if not M_nu.invariant and (need_g >= M_nu.alphas.size or need_d >= M_nu.betas.size):
        raise ValueError(
            f"nu Jacobi matrix of order {M_nu.order} too small for degree {s} with band {band}"
        )
    gamma[:ng] = M_nu.alphas[:ng]
    delta[:nd] = M_nu.betas[:nd]

    C = np.zeros((s + 1, s + 1))
    C[0, 0] = 1.0
    rows = np.arange(s + 1)
    for j in range(1, s + 1):
        top = min(j, band - j)
        if top < 0:
            C[: j + 1, j] = np.nan
            continue
        i = rows[: top + 1]
        col = (gamma[i] - alpha[j - 1]) * C[i, j - 1]
        col[1:] += delta[i[1:] - 1] * C[i[1:] - 1, j - 1]
        nxt = i[i + 1 <= s]
        col[: nxt.size] += delta[nxt] * C[nxt + 1, j - 1]
        if j >= 2:
            col -= beta[j - 2] * C[i, j - 2]
        C[: top + 1, j] = col / beta[j - 1]
        C[top + 1 : j + 1, j] = np.nan
    return C


_FLOAT = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_SIMPLE = re.compile(rf"^\s*(chebT|chebU)\s*\(\s*({_FLOAT})\s*,\s*({_FLOAT})\s*\)\s*$")
_TERM = re.compile(
    rf"\s*({_FLOAT})\s*\*\s*(?:(chebU)\s*\(\s*({_FLOAT})\s*,\s*({_FLOAT})\s*\)|(atom)\s*\(\s*({_FLOAT})\s*\))\s*"
)


def parse_measure(text):
    """Parse ``chebT(a,b)``, ``chebU(a,b)`` or ``mix(w*chebU(a,b)+...+p*atom(z))``."""
    m = _SIMPLE.match(text)
    if m:
        kind, a, b = m.groups()
        return (ChebyshevT if kind == "chebT" else ChebyshevU)(float(a), float(b))
    body = re.match(r"^\s*mix\s*\((.*)\)\s*$", text)
    if not body:
        raise ValueError(f"cannot parse measure '{text}'")
    body = body.group(1)
    comps, pos = [], 0
    while True:
        t = _TERM.match(body, pos)
        if not t:
            raise ValueError(f"cannot parse mixture term at '{body[pos:]}'")
        w = float(t.group(1))
        if t.group(2):
            comps.append((w, ChebyshevU(float(t.group(3)), float(t.group(4)))))
        else:
            comps.append((w, Atom(float(t.group(6)))))
        pos = t.end()
        if pos == len(body):
            break
        if body[pos] != "+":
            raise ValueError(f"expected '+' at '{body[pos:]}'")
        pos += 1
    return Mixture(comps)
