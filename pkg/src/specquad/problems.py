"""Test problems with known spectra."""

from itertools import combinations
from math import comb
import re

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from .operators import (
    LinearOperator,
    block_diagonal_operator,
    dense_operator,
    diagonal_operator,
    sparse_operator,
)

__all__ = [
    "uniform_spectrum",
    "gapped_spectrum",
    "model_problem",
    "kneser_spectrum",
    "kneser_adjacency",
    "sample_covariance",
    "mp_edges",
    "spiked_covariance",
    "heisenberg_ring",
    "parse_problem",
    "MAX_KNESER_VERTICES",
    "SizeLimitError",
]

MAX_KNESER_VERTICES = 10**6
MAX_SPIN_DIM = 2**24


class SizeLimitError(ValueError):
    """The requested problem exceeds a size cap."""


def uniform_spectrum(n):
    """Diagonal operator with eigenvalues -1 + (2i+1)/n, i = 0..n-1."""
    if n < 1:
        raise ValueError("n must be positive")
    return diagonal_operator(-1.0 + (2.0 * np.arange(n) + 1.0) / n, name=f"uniform({n})")


def gapped_spectrum(n_base):
    """uniform_spectrum(n_base) restricted to |lambda| >= 0.75."""
    lam = uniform_spectrum(n_base).exact_spectrum
    return diagonal_operator(lam[np.abs(lam) >= 0.75], name=f"gapped({n_base})")


def model_problem(n, kappa, rho):
    """lambda_i = 1 + (i-1)/(n-1) (kappa-1) rho^(n-i), i = 1..n."""
    if n < 2 or not kappa > 1 or not 0 < rho <= 1:
        raise ValueError("need n >= 2, kappa > 1 and 0 < rho <= 1")
    i = np.arange(1, n + 1)
    lam = 1.0 + (i - 1) / (n - 1) * (kappa - 1.0) * rho ** (n - i)
    return diagonal_operator(lam, name=f"model({n},{kappa:g},{rho:g})")


def kneser_spectrum(N, K):
    """Distinct eigenvalues and multiplicities of the Kneser graph K(N, K)."""
    if N < 2 * K or K < 0:
        raise ValueError(f"need N >= 2K, got N={N}, K={K}")
    i = np.arange(K + 1)
    eigs = np.array([(-1) ** j * comb(N - K - j, K - j) for j in i], dtype=np.int64)
    mult = np.array([comb(N, j) - (comb(N, j - 1) if j > 0 else 0) for j in i], dtype=np.int64)
    return eigs, mult


def kneser_adjacency(N, K, max_vertices=MAX_KNESER_VERTICES):
    """Sparse adjacency of the Kneser graph: K-subsets joined when disjoint."""
    if N < 2 * K or K < 0:
        raise ValueError(f"need N >= 2K, got N={N}, K={K}")
    nv = comb(N, K)
    if nv > max_vertices:
        raise SizeLimitError(f"Kneser graph K({N},{K}) has {nv} vertices, above the cap {max_vertices}")
    masks = [sum(1 << e for e in c) for c in combinations(range(N), K)]
    index = {m: i for i, m in enumerate(masks)}
    rows, cols = [], []
    for i, m in enumerate(masks):
        rest = [e for e in range(N) if not m >> e & 1]
        for c in combinations(rest, K):
            rows.append(i)
            cols.append(index[sum(1 << e for e in c)])
    M = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(nv, nv))
    eigs, mult = kneser_spectrum(N, K)
    exact = np.repeat(eigs.astype(float), mult)
    return sparse_operator(M, exact_spectrum=exact, name=f"kneser({N},{K})", check=False)


def sample_covariance(n, d, sigma, seed=0, chunk=2048):
    """Sample covariance (1/m) S^(1/2) X X^T S^(1/2) with m = n/d.

    S = diag(1, ..., 1, sigma, ..., sigma) with n/2 entries of each, which is
    the population whose limiting edges :func:`mp_edges` returns. X is n x m
    standard normal, generated in column chunks.
    """
    if n % 2 or not 0 < d < 1 or not sigma > 1:
        raise ValueError("need even n, 0 < d < 1 and sigma > 1")
    m = int(round(n / d))
    rng = np.random.default_rng(seed)
    scale = np.sqrt(np.concatenate([np.ones(n // 2), np.full(n // 2, float(sigma))]))
    A = np.zeros((n, n))
    for start in range(0, m, chunk):
        Y = rng.standard_normal((n, min(chunk, m - start))) * scale[:, None]
        A += Y @ Y.T
    A /= m
    A = 0.5 * (A + A.T)
    return dense_operator(A, name=f"sampcov({n},{d:g},{sigma:g})", check=False)


def _edge_map(x, d, sigma):
    return -1.0 / x + 0.5 * d * (1.0 / (x + 1.0) + 1.0 / (x + 1.0 / sigma))


def _edge_map_deriv(x, d, sigma):
    return 1.0 / x**2 - 0.5 * d * (1.0 / (x + 1.0) ** 2 + 1.0 / (x + 1.0 / sigma) ** 2)


def mp_edges(d, sigma):
    """Limiting spectral edges (a1, b1, a2, b2) of :func:`sample_covariance`.

    The edges are the values of x -> -1/x + (d/2)(1/(x+1) + 1/(x+1/sigma)) at
    its local extrema, found by bracketing the derivative between the poles.
    """
    if not 0 < d < 1 or not sigma > 1:
        raise ValueError("need 0 < d < 1 and sigma > 1")
    poles = [-1.0, -1.0 / sigma, 0.0]
    pieces = [(-1e6, -1.0), (-1.0, -1.0 / sigma), (-1.0 / sigma, 0.0)]
    roots = []
    for lo, hi in pieces:
        # dense sampling that resolves the poles at both ends
        t = np.linspace(0.0, 1.0, 20001)[1:-1]
        w = hi - lo
        x = lo + w * (0.5 - 0.5 * np.cos(np.pi * t)) ** 3 if lo == -1e6 else lo + w * (0.5 - 0.5 * np.cos(np.pi * t))
        g = _edge_map_deriv(x, d, sigma)
        for k in np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]:
            roots.append(brentq(_edge_map_deriv, x[k], x[k + 1], args=(d, sigma), xtol=1e-15))
    roots = [r for r in roots if min(abs(r - p) for p in poles) > 0]
    if len(roots) != 4:
        raise ValueError(f"found {len(roots)} critical points instead of 4; (d, sigma) gives no gap")
    edges = np.sort([_edge_map(r, d, sigma) for r in roots])
    return tuple(float(e) for e in edges)


def spiked_covariance(n, n_prime, d, z, sigma, seed=0):
    """Block diagonal [X X^T / m, 0; 0, z I + sigma D] with m = n'/d and D standard normal."""
    if not 0 < n_prime < n or not 0 < d < 1 or sigma < 0:
        raise ValueError("need 0 < n' < n, 0 < d < 1 and sigma >= 0")
    m = int(round(n_prime / d))
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_prime, m))
    W = X @ X.T / m
    W = 0.5 * (W + W.T)
    spike = z + sigma * rng.standard_normal(n - n_prime)
    return block_diagonal_operator(
        [dense_operator(W, check=False), diagonal_operator(spike)],
        name=f"spiked({n},{n_prime},{d:g},{z:g},{sigma:g})",
    )


class HeisenbergOperator(LinearOperator):
    """Spin Hamiltonian sum_{i,j} J_ij (Jx sx_i sx_j + Jy sy_i sy_j + Jz sz_i sz_j).

    Basis states are base-(2S+1) digit strings (site 0 most significant,
    digit t meaning m = S - t). The matvec applies the diagonal part and the
    precomputed real actions of s+ s- type pair operators.
    """

    def __init__(self, N, S, J, Jx=1.0, Jy=1.0, Jz=1.0):
        two_s = round(2 * S)
        if two_s < 1 or abs(2 * S - two_s) > 1e-12:
            raise ValueError(f"unsupported spin S={S}")
        q = two_s + 1
        dim = q**N
        if dim > MAX_SPIN_DIM:
            raise SizeLimitError(f"Hilbert space dimension {dim} exceeds cap {MAX_SPIN_DIM}")
        states = np.arange(dim)
        digits = np.stack([(states // q ** (N - 1 - i)) % q for i in range(N)])
        mz = S - digits
        # <m+1| s+ |m>
        raise_c = np.sqrt(S * (S + 1) - mz * (mz + 1))
        lower_c = np.sqrt(S * (S + 1) - mz * (mz - 1))
        place = q ** (N - 1 - np.arange(N))
        diag = np.zeros(dim)
        terms = []
        for i in range(N):
            for j in range(i + 1, N):
                c = J[i, j] + J[j, i]
                if c == 0:
                    continue
                diag += c * Jz * mz[i] * mz[j]
                for si, sj, coef in ((1, -1, Jx + Jy), (-1, 1, Jx + Jy), (1, 1, Jx - Jy), (-1, -1, Jx - Jy)):
                    coef = 0.25 * c * coef
                    if coef == 0:
                        continue
                    # s+ lowers the digit, s- raises it
                    ci = raise_c[i] if si > 0 else lower_c[i]
                    cj = raise_c[j] if sj > 0 else lower_c[j]
                    ok = (ci > 0) & (cj > 0)
                    src = states[ok]
                    dst = src - si * place[i] - sj * place[j]
                    terms.append((src, dst, coef * ci[ok] * cj[ok]))
        self._diag = diag
        self._terms = terms
        self.N, self.S = N, S
        super().__init__(dim, self._matvec, name=f"heisenberg({N},{S:g})")

    def _matvec(self, x):
        y = self._diag * x
        for src, dst, val in self._terms:
            y[dst] += val * x[src]
        return y


def heisenberg_ring(N, S, Jx=1.0, Jy=1.0, Jz=1.0, exact=False):
    """Heisenberg ring with J_ij = 1(|i-j| = 1 mod N) over ordered pairs."""
    if N < 2:
        raise ValueError("need at least two sites")
    idx = np.arange(N)
    diff = (idx[:, None] - idx[None, :]) % N
    J = ((diff == 1) | (diff == N - 1)).astype(float)
    op = HeisenbergOperator(N, S, J, Jx, Jy, Jz)
    if exact:
        op.exact_spectrum = np.linalg.eigvalsh(op.to_dense())
    return op


_CALL = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def parse_problem(text, seed=0):
    """Build an operator from e.g. ``uniform(1000)`` or ``kneser(10,4)``."""
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse problem '{text}'")
    name = m.group(1)
    args = [a.strip() for a in m.group(2).split(",") if a.strip()]
    try:
        vals = [float(a) for a in args]
    except ValueError:
        raise ValueError(f"non-numeric argument in '{text}'") from None

    def ints(*pos):
        for p in pos:
            if vals[p] != int(vals[p]):
                raise ValueError(f"argument {p + 1} of {name} must be an integer")
        return [int(vals[p]) if p in pos else vals[p] for p in range(len(vals))]

    builders = {
        "uniform": (1, lambda: uniform_spectrum(*ints(0))),
        "gapped": (1, lambda: gapped_spectrum(*ints(0))),
        "model": (3, lambda: model_problem(*ints(0))),
        "kneser": (2, lambda: kneser_adjacency(*ints(0, 1))),
        "sampcov": (3, lambda: sample_covariance(*ints(0), seed=seed)),
        "spiked": (5, lambda: spiked_covariance(*ints(0, 1), seed=seed)),
        "heisenberg": (2, lambda: heisenberg_ring(*ints(0))),
    }
    if name not in builders:
        raise ValueError(f"unknown problem '{name}'; choose from {sorted(builders)}")
    nargs, build = builders[name]
    if len(vals) != nargs:
        raise ValueError(f"{name} takes {nargs} argument(s), got {len(vals)}")
    return build()
