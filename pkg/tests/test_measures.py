import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy import integrate

from specquad.measures import (
    DiscreteDistribution,
    SeriesDistribution,
    smooth,
    total_variation,
    wasserstein,
    write_csv,
)
from specquad.orthopoly import ChebyshevT, ChebyshevU
from specquad.quadrature import jackson_coefficients


def atom(x):
    return DiscreteDistribution([x], [1.0])


def test_atom_cdf_is_right_continuous():
    d = atom(0.0)
    assert d.cdf(-0.1) == 0.0
    assert d.cdf(0.0) == 1.0


def test_coincident_nodes_merge_exactly():
    d = DiscreteDistribution([1.0, 0.0, 1.0, 1.0 + 1e-15], [0.25, 0.25, 0.25, 0.25])
    assert_array_equal(d.nodes, [0.0, 1.0, 1.0 + 1e-15])
    assert_array_equal(d.weights, [0.25, 0.5, 0.25])


def test_series_chebyshev_cdf():
    mu = ChebyshevT(-1, 1)
    x = np.linspace(-1, 1, 41)
    d = SeriesDistribution(mu, [1.0, 0.0, 0.0])
    assert_allclose(d.cdf(x), 0.5 + np.arcsin(x) / np.pi, atol=1e-15)
    m1 = 0.3
    d = SeriesDistribution(mu, [1.0, m1])
    expected = 0.5 + np.arcsin(x) / np.pi - m1 * np.sqrt(2) * np.sin(np.arccos(x)) / np.pi
    assert_allclose(d.cdf(x), expected, atol=1e-15)


def test_series_cdf_matches_numeric_integration():
    rng = np.random.default_rng(4)
    c = np.concatenate([[1.0], 0.3 * rng.standard_normal(6)])
    for mu in (ChebyshevT(-0.5, 2.0), ChebyshevU(-0.5, 2.0)):
        d = SeriesDistribution(mu, c)
        for x in (-0.3, 0.4, 1.1, 1.9):
            # substitute t = mid + half*cos(phi) so the endpoint singularity disappears
            a, b = mu.support

            def integrand(phi):
                t = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(phi)
                jac = 0.5 * (b - a) * np.sin(phi)
                return d.density(np.array([t]))[0] * jac

            phi_x = np.arccos((2 * x - a - b) / (b - a))
            ref, _ = integrate.quad(integrand, phi_x, np.pi, epsabs=1e-14, epsrel=1e-13, limit=200)
            assert_allclose(d.cdf(x), ref, atol=1e-12)


def test_density_values():
    assert_allclose(SeriesDistribution(ChebyshevT(-1, 1), [1.0, 0.0]).density(0.0), 1 / np.pi)
    assert_allclose(SeriesDistribution(ChebyshevU(-1, 1), [1.0, 0.0]).density(0.0), 2 / np.pi)
    mu = ChebyshevT(-1, 1)
    x = np.linspace(-0.9, 0.9, 7)
    c1, c2 = np.array([1.0, 0.2, -0.1]), np.array([0.0, 0.5, 0.3])
    assert_allclose(
        SeriesDistribution(mu, c1 + c2).density(x),
        SeriesDistribution(mu, c1).density(x) + SeriesDistribution(mu, c2).density(x),
        atol=1e-14,
    )
    with pytest.raises(ValueError):
        SeriesDistribution(mu, c1).density(1.5)


def test_wasserstein_basic():
    assert wasserstein(atom(0.0), atom(1.0)) == 1.0
    d = DiscreteDistribution([0.1, 0.5], [0.5, 0.5])
    assert wasserstein(d, d) == 0.0

    class Uniform:
        support = (0.0, 1.0)

        def mass(self):
            return 1.0

        def cdf(self, x):
            return np.clip(x, 0.0, 1.0)

        def breakpoints(self):
            return np.array([0.0, 1.0])

    assert_allclose(wasserstein(atom(0.0), Uniform(), support=(0.0, 1.0)), 0.5, atol=1e-12)


def test_wasserstein_mass_mismatch():
    with pytest.raises(ValueError):
        wasserstein(atom(0.0), DiscreteDistribution([0.0], [0.5]))


def test_total_variation():
    rng = np.random.default_rng(0)
    w = rng.uniform(size=8)
    assert_allclose(total_variation(DiscreteDistribution(rng.uniform(size=8), w / w.sum())), 1.0)
    assert_allclose(total_variation(DiscreteDistribution([0, 1, 2], [0.6, 0.6, -0.2])), 1.4)
    assert total_variation(DiscreteDistribution([], [])) == 0.0


def test_smooth_single_atom():
    from scipy.stats import norm

    s = smooth(atom(0.7), 0.05)
    x = np.linspace(0.5, 0.9, 9)
    assert_allclose(s.cdf(x), norm.cdf((x - 0.7) / 0.05), atol=1e-15)
    assert_allclose(s.density(x), norm.pdf((x - 0.7) / 0.05) / 0.05, rtol=1e-13)
    with pytest.raises(ValueError):
        smooth(atom(0.0), 0.0)


@pytest.mark.parametrize("sigma", [1e-3, 1e-2, 1e-1])
def test_smooth_single_atom_distance(sigma):
    # E|Z| for a standard normal
    assert_allclose(wasserstein(atom(0.0), smooth(atom(0.0), sigma)), sigma * np.sqrt(2 / np.pi), rtol=1e-9)


def random_discrete(rng, n=None):
    n = n or rng.integers(1, 12)
    w = rng.uniform(0.05, 1.0, n)
    return DiscreteDistribution(rng.uniform(-1, 1, n), w / w.sum())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_discrete(rng) for _ in range(3))
    assert wasserstein(a, c) <= wasserstein(a, b) + wasserstein(b, c) + 1e-10


def _random_lipschitz(rng, lo=-1.0, hi=1.0):
    knots = np.sort(rng.uniform(lo, hi, 6))
    slopes = rng.uniform(-1, 1, 7)
    vals = np.concatenate([[0.0], np.cumsum(slopes[1:-1] * np.diff(knots))])

    def f(x):
        y = np.interp(x, knots, vals)
        y = np.where(x < knots[0], slopes[0] * (x - knots[0]), y)
        return np.where(x > knots[-1], vals[-1] + slopes[-1] * (x - knots[-1]), y)

    return f


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dual_bound(seed):
    rng = np.random.default_rng(seed)
    d1, d2 = random_discrete(rng), random_discrete(rng)
    w = wasserstein(d1, d2)
    for _ in range(200):
        f = _random_lipschitz(rng)
        assert abs(d1.integrate(f) - d2.integrate(f)) <= w + 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1e-3, 1e-2, 1e-1]))
def test_smoothing_distance_bound(seed, sigma):
    d = random_discrete(np.random.default_rng(seed))
    assert wasserstein(d, smooth(d, sigma)) <= sigma + 1e-9


def test_jackson_damped_cdf_monotone():
    rng = np.random.default_rng(5)
    lam = rng.uniform(-1, 1, 60)
    w = rng.dirichlet(np.ones(60))
    s = 40
    mu = ChebyshevT(-1, 1)
    m = w @ mu.polys(lam, s).T
    d = SeriesDistribution(mu, jackson_coefficients(s) * m)
    F = d.cdf(np.linspace(-1, 1, 10_000))
    assert np.all(np.diff(F) >= -1e-12)
    undamped = SeriesDistribution(mu, m).cdf(np.linspace(-1, 1, 10_000))
    assert np.any(np.diff(undamped) < -1e-6)


def test_write_csv(tmp_path):
    p = tmp_path / "c.csv"
    write_csv(p, [0.1, 1 / 3], [1.0, 2.0])
    lines = p.read_text().splitlines()
    assert lines[0] == "x,value"
    assert lines[2] == "0.33333333333333331,2"
    assert float(lines[2].split(",")[0]) == 1 / 3
