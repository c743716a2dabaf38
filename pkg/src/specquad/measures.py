"""Discrete and series spectral distributions, distances and smoothing."""

import warnings

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

__all__ = [
    "DiscreteDistribution",
    "SeriesDistribution",
    "SmoothedDistribution",
    "cdf",
    "density",
    "wasserstein",
    "total_variation",
    "smooth",
    "write_csv",
]

# minimum panel count for quadrature-based Wasserstein distances
MIN_PANELS = 4096


class DiscreteDistribution:
    """Atomic distribution x -> sum_j w_j 1[theta_j <= x].

    Nodes are sorted and exactly coincident nodes merged by adding weights.
    Weights may be signed.
    """

    def __init__(self, nodes, weights):
        nodes = np.asarray(nodes, dtype=float).reshape(-1)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if nodes.shape != weights.shape:
            raise ValueError("nodes and weights must have equal length")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
            raise ValueError("nodes and weights must be finite")
        uniq, inv = np.unique(nodes, return_inverse=True)
        weights = np.bincount(inv, weights=weights, minlength=uniq.size)
        uniq.flags.writeable = False
        weights.flags.writeable = False
        self.nodes = uniq
        self.weights = weights
        self._cum = np.concatenate([[0.0], np.cumsum(weights)])

    def __len__(self):
        return self.nodes.size

    def __repr__(self):
        return f"DiscreteDistribution({self.nodes.size} atoms, mass={self.mass():.6g})"

    def mass(self):
        return float(self._cum[-1])

    def total_variation(self):
        return float(np.sum(np.abs(self.weights)))

    def cdf(self, x):
        """Right-continuous distribution function."""
        return self._cum[np.searchsorted(self.nodes, x, side="right")]

    def integrate(self, f):
        """sum_j w_j f(theta_j)."""
        return float(np.dot(self.weights, f(self.nodes)))

    def breakpoints(self):
        return self.nodes

    @property
    def support(self):
        if self.nodes.size == 0:
            return (0.0, 0.0)
        return (float(self.nodes[0]), float(self.nodes[-1]))

    @classmethod
    def mixture(cls, dists, weights=None):
        """Weighted sum of discrete distributions (uniform weights by default)."""
        if weights is None:
            weights = np.full(len(dists), 1.0 / len(dists))
        nodes = np.concatenate([d.nodes for d in dists])
        w = np.concatenate([c * d.weights for c, d in zip(weights, dists)])
        return cls(nodes, w)


class SeriesDistribution:
    """Distribution with density dmu/dx * sum_i c_i p_i(x).

    ``measure`` is a reference measure from :mod:`specquad.orthopoly` and
    ``coeffs`` are (possibly damped) modified moments.
    """

    def __init__(self, measure, coeffs):
        coeffs = np.array(coeffs, dtype=float).reshape(-1)
        if coeffs.size == 0:
            raise ValueError("need at least one coefficient")
        coeffs.flags.writeable = False
        self.measure = measure
        self.coeffs = coeffs

    @property
    def degree(self):
        return self.coeffs.size - 1

    @property
    def support(self):
        return self.measure.support

    def __repr__(self):
        return f"SeriesDistribution({self.measure!r}, degree={self.degree})"

    def mass(self):
        return float(self.coeffs[0])

    def cdf(self, x):
        P = self.measure.partial_integrals(x, self.degree)
        return np.tensordot(self.coeffs, P, axes=1)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.support
        if np.any((x < a) | (x > b)):
            raise ValueError(f"density evaluated outside the support [{a}, {b}]")
        P = self.measure.polys(x, self.degree)
        return self.measure.density(x) * np.tensordot(self.coeffs, P, axes=1)

    def breakpoints(self):
        return self.measure.breakpoints()


class SmoothedDistribution:
    """Gaussian convolution of a discrete distribution with bandwidth sigma."""

    def __init__(self, dist, sigma):
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        self.dist = dist
        self.sigma = float(sigma)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self.dist.nodes) / self.sigma
        return ndtr(z) @ self.dist.weights

    def density(self, x):
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self.dist.nodes) / self.sigma
        pdf = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
        return pdf @ self.dist.weights / self.sigma

    def mass(self):
        return self.dist.mass()

    @property
    def support(self):
        a, b = self.dist.support
        return (a - 12.0 * self.sigma, b + 12.0 * self.sigma)

    def breakpoints(self):
        offs = self.sigma * np.array([-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0])
        return (self.dist.nodes[:, None] + offs).ravel()


def cdf(dist, x):
    return dist.cdf(x)


def density(dist, x):
    return dist.density(x)


def total_variation(dist):
    return dist.total_variation()


def smooth(dist, sigma):
    """Convolve ``dist`` with a normal density of standard deviation sigma."""
    return SmoothedDistribution(dist, sigma)


def wasserstein(d1, d2, support=None, panels=MIN_PANELS):
    """Wasserstein-1 distance, the integral of |F1 - F2|.

    Exact for two discrete distributions. Otherwise composite 8-point
    Gauss-Legendre on at least ``panels`` panels over ``support`` (refined at
    every breakpoint of either operand), checked against a run with twice as
    many panels.
    """
    m1, m2 = d1.mass(), d2.mass()
    if abs(m1 - m2) > 1e-8:
        raise ValueError(f"mass mismatch: {m1} vs {m2}")
    if isinstance(d1, DiscreteDistribution) and isinstance(d2, DiscreteDistribution):
        t = np.union1d(d1.nodes, d2.nodes)
        if t.size < 2:
            return 0.0
        diff = np.abs(d1.cdf(t[:-1]) - d2.cdf(t[:-1]))
        return float(np.dot(diff, np.diff(t)))
    if support is None:
        s1, s2 = d1.support, d2.support
        support = (min(s1[0], s2[0]), max(s1[1], s2[1]))
    a, b = support
    coarse = _panel_integral(d1, d2, a, b, panels)
    fine = _panel_integral(d1, d2, a, b, 2 * panels)
    if abs(fine - coarse) > 1e-8 * max(1.0, fine):
        warnings.warn(
            f"Wasserstein quadrature not converged: {coarse:.3e} vs {fine:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return fine


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _panel_integral(d1, d2, a, b, panels):
    extra = np.concatenate([np.asarray(d1.breakpoints()), np.asarray(d2.breakpoints())])
    extra = extra[(extra > a) & (extra < b)]
    t = np.union1d(np.linspace(a, b, panels + 1), extra)
    t = np.union1d(t, _crossings(d1, d2, t))
    h = np.diff(t)
    mid = 0.5 * (t[:-1] + t[1:])
    x = mid[:, None] + 0.5 * h[:, None] * _GL_X
    vals = np.abs(d1.cdf(x.ravel()) - d2.cdf(x.ravel())).reshape(x.shape)
    return float(np.sum(0.5 * h * (vals @ _GL_W)))


def _crossings(d1, d2, t):
    # sign changes of F1 - F2 inside panels; splitting there removes the kink of |F1 - F2|
    h = np.diff(t)
    inner = 0.5 * (t[:-1] + t[1:])[:, None] + 0.5 * h[:, None] * _GL_X
    t = np.sort(np.concatenate([t, inner.ravel()]))
    g = d1.cdf(t) - d2.cdf(t)
    idx = np.nonzero(g[:-1] * g[1:] < 0)[0]
    diff = lambda x: float(d1.cdf(x) - d2.cdf(x))
    roots = []
    for k in idx:
        # roundoff-level sign flips may not bracket in scalar evaluation
        if diff(t[k]) * diff(t[k + 1]) < 0:
            roots.append(brentq(diff, t[k], t[k + 1], xtol=1e-15))
    return np.array(roots)


def write_csv(path, x, values, header=("x", "value")):
    """Write x and one or more value columns at 17 significant digits.

    ``values`` is a single column or a sequence of columns.
    """
    V = np.asarray(values, dtype=float)
    cols = [np.asarray(x, dtype=float)] + ([V] if V.ndim == 1 else list(V))
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
