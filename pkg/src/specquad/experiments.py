"""Desk-scale reproductions of the reference experiments.

Each function returns plain arrays and, given ``out``, writes one CSV per
curve into that directory.
"""

import os

import numpy as np

from .estimator import EstimateConfig, estimate_spectrum, heat_capacity_from, sample_stream, sample_unit_sphere
from .measures import DiscreteDistribution, write_csv
from .moments import chebyshev_moments, lanczos, moments_from_cheb, moments_from_lanczos
from .orthopoly import Atom, ChebyshevT, ChebyshevU, Mixture
from .problems import (
    gapped_spectrum,
    heisenberg_ring,
    kneser_adjacency,
    kneser_spectrum,
    model_problem,
    mp_edges,
    sample_covariance,
    spiked_covariance,
    uniform_spectrum,
)
from .operators import scale_shift
from .quadrature import (
    apply_damping,
    approx_quad_by_approximation,
    gaussian_quadrature,
    jackson_coefficients,
    quad_by_approximation,
    quad_by_interpolation,
)

__all__ = ["EXPERIMENTS", "run_experiment"]


def _write(out, name, columns):
    if out is None:
        return
    os.makedirs(out, exist_ok=True)
    header = list(columns)
    values = [columns[h] for h in header[1:]]
    write_csv(os.path.join(out, name), columns[header[0]], values, header)


def _runge(x):
    return 1.0 / (1.0 + 16.0 * x * x)


def runge(out=None, n=10_000, k_max=30):
    """Error of gq, iq and aaq for the Runge function versus k (s = 2k).

    The start vector has equal weight on every eigencomponent, so the
    quadratures approximate the CESM itself.
    """
    curves = {}
    for label, A in (("uniform", uniform_spectrum(n)), ("gapped", gapped_spectrum(n))):
        lam = A.exact_spectrum
        v = np.full(A.dim, 1.0 / np.sqrt(A.dim))
        exact = float(np.mean(_runge(lam)))
        ks = np.arange(1, k_max + 1)
        T = lanczos(A, v, k_max, reorth=True)
        cheb = chebyshev_moments(A, v, k_max, -1.0, 1.0)
        gq, iq, aaq = [], [], []
        for k in ks:
            g = gaussian_quadrature(T.block(min(k, T.order)))
            gq.append(abs(g.integrate(_runge) - exact))
            m = cheb.truncate(2 * k)
            iq.append(abs(quad_by_interpolation(m).integrate(_runge) - exact))
            aaq.append(abs(approx_quad_by_approximation(m).integrate(_runge) - exact))
        curves[label] = {"k": ks, "gq": np.array(gq), "iq": np.array(iq), "aaq": np.array(aaq)}
        _write(out, f"runge_{label}.csv", curves[label])
    return curves


def finite_precision(out=None, n=300, kappa=1e3, rho=0.85, k=100, seed=0):
    """Chebyshev moments from the doubling recurrence and from Lanczos runs.

    The model problem is scaled to unit norm. Lanczos without
    reorthogonalization loses orthogonality yet gives the same moments.
    """
    A = scale_shift(model_problem(n, kappa, rho), 1.0 / kappa, 0.0)
    mu = ChebyshevT(0.0, 1.0)
    v = sample_unit_sphere(A.dim, sample_stream(seed))
    s = 2 * k
    cheb = moments_from_cheb(A, v, s, mu, 0.0, 1.0).values
    plain = moments_from_lanczos(A, v, s, mu).values
    reorth = moments_from_lanczos(A, v, s, mu, reorth=True).values
    curves = {
        "degree": np.arange(s + 1),
        "cheb": cheb,
        "lanczos": plain,
        "lanczos_reorth": reorth,
        "abs_diff": np.abs(cheb - plain),
    }
    _write(out, "finite_precision_moments.csv", curves)
    return curves


def kneser(out=None, N=10, K=4, s=500, grid=2000, seed=0):
    """Exact spectrum, single-vector gq at k = K+1, and damped aq at degree s."""
    A = kneser_adjacency(N, K)
    eigs, mult = kneser_spectrum(N, K)
    v = sample_unit_sphere(A.dim, sample_stream(seed))
    lam, U = np.linalg.eigh(A.to_dense())
    proj = (U.T @ v) ** 2
    psi = np.array([proj[np.abs(lam - e) < 1e-8].sum() for e in eigs])
    order = np.argsort(eigs)
    exact = {"eigenvalue": eigs[order], "multiplicity_weight": mult[order] / A.dim, "psi_weight": psi[order]}
    g = gaussian_quadrature(lanczos(A, v, K + 1, reorth=True))
    gq = {"node": g.nodes, "weight": g.weights}
    lo, hi = float(eigs.min()), float(eigs.max())
    pad = 0.01 * (hi - lo)
    a, b = lo - pad, hi + pad
    m = moments_from_cheb(A, v, s, ChebyshevT(a, b), a, b)
    damped = quad_by_approximation(apply_damping(m, jackson_coefficients(s)))
    x = np.linspace(a, b, grid + 2)[1:-1]
    aq = {"x": x, "density": damped.density(x), "cdf": damped.cdf(x)}
    _write(out, "kneser_exact.csv", exact)
    _write(out, "kneser_gq.csv", gq)
    _write(out, "kneser_damped_aq.csv", aq)
    return {"exact": exact, "gq": gq, "damped_aq": aq}


def sampcov(out=None, n=2000, d=0.3, sigma=10.0, s=120, n_v=4, grid=2000, seed=0,
            spiked_n=10_000, spike_z=1.5, spike_sigma=1e-10, spike_s=200, p=0.2):
    """Densities with Chebyshev versus fitted-mixture reference measures.

    The first problem is the two-population sample covariance; the mixture
    places Chebyshev-U components on the limiting edges. The second is the
    spiked matrix, where the mixture adds a point mass at the spike.
    """
    curves = {}
    a1, b1, a2, b2 = mp_edges(d, sigma)
    A = sample_covariance(n, d, sigma, seed=seed)
    lo, hi = a1 - 0.05 * (b2 - a1), b2 + 0.05 * (b2 - a1)
    mix = Mixture([(0.5, ChebyshevU(a1, b1)), (0.5, ChebyshevU(a2, b2))])
    x = np.linspace(lo, hi, grid + 2)[1:-1]
    out_cov = {"x": x}
    for label, mu in (("chebT", ChebyshevT(lo, hi)), ("mixture", mix)):
        cfg = EstimateConfig(method="aq", k=(s + 1) // 2, s=s, n_v=n_v, seed=seed, measure=mu,
                             interval=(lo, hi), auto_interval=False, moment_path="lanczos")
        avg = estimate_spectrum(A, cfg).average
        out_cov[f"density_{label}"] = _safe_density(avg, x)
        out_cov[f"cdf_{label}"] = avg.cdf(x)
    curves["sampcov"] = out_cov
    _write(out, "sampcov_density.csv", out_cov)

    n_prime = spiked_n // 10
    B = spiked_covariance(spiked_n, n_prime, d, spike_z, spike_sigma, seed=seed)
    a, b = (1 - np.sqrt(d)) ** 2, (1 + np.sqrt(d)) ** 2
    lo, hi = a - 0.05 * (b - a), max(b, spike_z) + 0.05 * (b - a)
    mix = Mixture([(1.0 - p, ChebyshevU(a, b)), (p, Atom(spike_z))])
    x = np.linspace(lo, hi, grid)
    out_sp = {"x": x}
    for label, mu in (("chebT", ChebyshevT(lo, hi)), ("mixture", mix)):
        cfg = EstimateConfig(method="aq", k=(spike_s + 1) // 2, s=spike_s, n_v=n_v, seed=seed, measure=mu,
                             interval=(lo, hi), auto_interval=False, moment_path="lanczos")
        avg = estimate_spectrum(B, cfg).average
        out_sp[f"cdf_{label}"] = avg.cdf(x)
    curves["spiked"] = out_sp
    _write(out, "spiked_cdf.csv", out_sp)
    return curves


def _safe_density(dist, x):
    # zero outside the support hull instead of raising
    inside = (x >= dist.support[0]) & (x <= dist.support[1])
    out = np.zeros_like(x)
    out[inside] = dist.density(x[inside])
    return out


def heat_capacity(out=None, N=8, S=0.5, k=40, n_v=100, seed=0, temps=None, margin=0.01):
    """C(T)/k_B from exact diagonalization, gq, iq and Jackson-damped iq.

    All methods share the same random vectors; iq uses mu^T on the range of
    the gq nodes widened by ``margin``.
    """
    H = heisenberg_ring(N, S)
    if temps is None:
        temps = np.geomspace(0.01, 5.0, 300)
    lam = np.linalg.eigvalsh(H.to_dense())
    exact = heat_capacity_from(_uniform_rule(lam), temps)
    slq = estimate_spectrum(H, EstimateConfig(method="slq", k=k, n_v=n_v, seed=seed, reorth=True))
    nodes = slq.average.nodes
    w = nodes[-1] - nodes[0]
    interval = (nodes[0] - margin * w, nodes[-1] + margin * w)
    curves = {"T": temps, "exact": exact, "gq": heat_capacity_from(slq.average, temps)}
    for label, damping in (("iq", "none"), ("iq_damped", "jackson")):
        cfg = EstimateConfig(method="iq", k=k, n_v=n_v, seed=seed, damping=damping, interval=interval,
                             auto_interval=False, moment_path="lanczos", reorth=True)
        curves[label] = heat_capacity_from(estimate_spectrum(H, cfg).average, temps)
    _write(out, "heat_capacity.csv", curves)
    return curves


def _uniform_rule(lam):
    return DiscreteDistribution(lam, np.full(lam.size, 1.0 / lam.size))


EXPERIMENTS = {
    "runge": runge,
    "finite-precision": finite_precision,
    "kneser": kneser,
    "sampcov": sampcov,
    "heat-capacity": heat_capacity,
}


def run_experiment(name, out=None, **kwargs):
    """Run a named preset; see :data:`EXPERIMENTS`."""
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment '{name}'; choose from {sorted(EXPERIMENTS)}")
    return EXPERIMENTS[name](out=out, **kwargs)
