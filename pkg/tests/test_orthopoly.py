from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import chebyshev as C
from numpy.testing import assert_allclose, assert_array_equal
from scipy import integrate

from specquad.moments import lanczos
from specquad.operators import diagonal_operator
from specquad.orthopoly import (
    Atom,
    ChebyshevT,
    ChebyshevU,
    Mixture,
    connection_coefficients,
    measure_gauss_rule,
    parse_measure,
    stieltjes_from_discrete,
)
from specquad.tridiag import chebyshev_T_jacobi, chebyshev_U_jacobi


def cheb_orthonormal(x, i, a=-1.0, b=1.0):
    u = (2 * np.asarray(x) - a - b) / (b - a)
    t = C.chebval(u, [0] * i + [1])
    return t if i == 0 else np.sqrt(2) * t


def test_connection_identity():
    J = chebyshev_U_jacobi(0.0, 3.0, 8)
    Cm = connection_coefficients(J, J, 6)
    assert_allclose(np.triu(Cm), np.eye(7), atol=1e-14)


def test_connection_base_cases():
    Mmu = chebyshev_T_jacobi(-1, 1, 3)
    Mnu = chebyshev_U_jacobi(-0.5, 2.0, 4)
    Cm = connection_coefficients(Mmu, Mnu, 2)
    g0, d0 = Mnu.alphas[0], Mnu.betas[0]
    a0, b0 = Mmu.alphas[0], Mmu.betas[0]
    assert_allclose(Cm[0, 1], (g0 - a0) / b0)
    assert_allclose(Cm[1, 1], d0 / b0)
    assert Cm[0, 0] == 1.0


def test_connection_against_integration():
    # mu = mu^T_{-1,1}, nu = mu^T_{0,1}; C[i,j] = int q_i p_j dnu
    s = 3
    Cm = connection_coefficients(chebyshev_T_jacobi(-1, 1, s + 1), chebyshev_T_jacobi(0, 1, s + 2), s)
    ref = np.zeros((s + 1, s + 1))
    for i in range(s + 1):
        for j in range(s + 1):
            val, _ = integrate.quad(
                lambda x: cheb_orthonormal(x, i, 0, 1) * cheb_orthonormal(x, j) / np.pi,
                0, 1, weight="alg", wvar=(-0.5, -0.5), epsabs=1e-13, epsrel=1e-13,
            )
            ref[i, j] = val
    assert_allclose(np.triu(Cm), np.triu(ref), atol=1e-10)
    assert_allclose(np.tril(ref, -1), 0.0, atol=1e-10)
    assert np.all(np.diag(Cm) > 0)


def test_connection_needs_order():
    with pytest.raises(ValueError):
        connection_coefficients(chebyshev_T_jacobi(-1, 1, 3), chebyshev_T_jacobi(-1, 1, 6), 5)
    with pytest.raises(ValueError):
        connection_coefficients(chebyshev_T_jacobi(-1, 1, 6), chebyshev_T_jacobi(-1, 1, 2), 5)


def test_connection_band_marks_unused_entries():
    Cm = connection_coefficients(chebyshev_T_jacobi(-1, 1, 7), chebyshev_U_jacobi(-1, 1, 4), 6, band=6)
    assert np.all(np.isfinite(Cm[0]))
    assert np.isnan(Cm[4, 4])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_moment_transport(seed, s):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-0.9, 1.9, 30)
    w = rng.dirichlet(np.ones(30))
    mu = ChebyshevU(-1.0, 2.0)
    nu = ChebyshevT(-1.2, 2.2)
    m_direct = w @ mu.polys(lam, s).T
    n = w @ nu.polys(lam, s).T
    Cm = connection_coefficients(mu.jacobi(s + 1), nu.jacobi(s + 2), s)
    m = np.triu(Cm).T @ n
    assert_allclose(m, m_direct, atol=1e-10 * max(1.0, np.abs(m_direct).max()))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_first_row_gives_moments(seed, k):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-1, 1, 40)
    w = rng.dirichlet(np.ones(40))
    T = lanczos(diagonal_operator(lam), np.sqrt(w), k, reorth=True)
    s = 2 * k if not T.invariant else 2 * T.order
    mu = ChebyshevT(-1, 1)
    Cm = connection_coefficients(mu.jacobi(s + 1), T, s, band=s)
    assert_allclose(Cm[0], w @ mu.polys(lam, s).T, atol=1e-8)


@pytest.mark.parametrize("d", [1, 3, 10, 33])
def test_gauss_rule_chebyshev_T(d):
    rule = measure_gauss_rule(ChebyshevT(-1, 1), d)
    j = np.arange(d, 0, -1)
    assert_allclose(rule.nodes, np.cos((2 * j - 1) * np.pi / (2 * d)), atol=1e-15)
    assert_allclose(rule.weights, 1.0 / d)
    # moment matching against numpy's Chebyshev basis
    for i in range(1, 2 * d):
        assert abs(rule.weights @ C.chebval(rule.nodes, [0] * i + [1])) < 1e-13


def test_gauss_rule_chebyshev_U_single_node():
    rule = measure_gauss_rule(ChebyshevU(-1, 1), 1)
    assert_allclose(rule.nodes, [0.0], atol=1e-16)
    assert_allclose(rule.weights, [1.0])


@pytest.mark.parametrize(
    "mu",
    [ChebyshevT(-2, 3), ChebyshevU(0.5, 1.0), Mixture([(0.3, ChebyshevU(-1, 0)), (0.7, ChebyshevU(0.5, 2))])],
    ids=repr,
)
@pytest.mark.parametrize("d", [1, 4, 15])
def test_gauss_rule_orthogonality(mu, d):
    rule = measure_gauss_rule(mu, d)
    P = mu.polys(rule.nodes, 2 * d - 1)
    expected = np.zeros(2 * d)
    expected[0] = 1.0
    assert_allclose(P @ rule.weights, expected, atol=1e-12)


def test_closed_form_rules_match_golub_welsch():
    for mu in (ChebyshevT(-1.0, 3.0), ChebyshevU(-1.0, 3.0)):
        from specquad.orthopoly import ReferenceMeasure

        nodes, weights = ReferenceMeasure._gauss_rule(mu, 12)
        rule = measure_gauss_rule(mu, 12)
        assert_allclose(rule.nodes, nodes, atol=1e-13)
        assert_allclose(rule.weights, weights, atol=1e-13)


def test_stieltjes_recovers_chebyshev():
    m = 12
    rule = measure_gauss_rule(ChebyshevT(-1, 1), 2 * m)
    J = stieltjes_from_discrete(rule.nodes, rule.weights, m)
    ref = chebyshev_T_jacobi(-1, 1, m)
    assert_allclose(J.alphas, ref.alphas, atol=1e-12)
    assert_allclose(J.betas, ref.betas, atol=1e-12)


def test_stieltjes_single_node():
    J = stieltjes_from_discrete([0.25], [1.0], 1)
    assert_array_equal(J.alphas, [0.25])
    with pytest.raises(ValueError):
        stieltjes_from_discrete([0.0, 1.0], [0.5, 0.5], 3)


def semicircle_moment(a, b, i):
    """Closed-form int x^i dmu^U_{a,b} from the Catalan moments of the semicircle."""
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    total = 0.0
    for j in range(0, i + 1, 2):
        k = j // 2
        catalan = comb(2 * k, k) / (k + 1)
        total += comb(i, j) * c ** (i - j) * h**j * catalan / 4**k
    return total


def test_mixture_monomial_moments():
    m = 20
    comps = [(0.5, ChebyshevU(-1, -0.75)), (0.5, ChebyshevU(0.75, 1))]
    rule = measure_gauss_rule(Mixture(comps), m)
    for i in range(2 * m):
        ref = sum(w * semicircle_moment(c.a, c.b, i) for w, c in comps)
        assert abs(rule.weights @ rule.nodes**i - ref) <= 1e-10


def test_single_component_mixture():
    mix = Mixture([(1.0, ChebyshevU(-0.5, 2.0))])
    J, ref = mix.jacobi(15), chebyshev_U_jacobi(-0.5, 2.0, 15)
    assert_allclose(J.alphas, ref.alphas, atol=1e-12)
    assert_allclose(J.betas, ref.betas, atol=1e-12)


def test_mixture_atom_jump_and_cap():
    p, z = 0.2, 1.5
    mix = Mixture([(1 - p, ChebyshevU(0.3, 2.0)), (p, Atom(z))])
    jump = mix.cdf(z) - mix.cdf(np.nextafter(z, -np.inf))
    assert_allclose(jump, p, atol=1e-14)
    atoms_only = Mixture([(0.5, Atom(0.0)), (0.5, Atom(1.0))])
    assert atoms_only.cap == 2
    atoms_only.jacobi(2)
    with pytest.raises(ValueError):
        atoms_only.jacobi(3)


def test_mixture_partial_integrals_match_cdf_of_polys():
    p, z = 0.2, 1.5
    mix = Mixture([(1 - p, ChebyshevU(0.3, 2.0)), (p, Atom(z))])
    x = np.array([0.2, 0.9, 1.5, 1.7, 2.5])
    P = mix.partial_integrals(x, 6)
    assert_allclose(P[0], mix.cdf(x), atol=1e-13)
    # full integrals of p_i are delta_{i0}
    assert_allclose(mix.partial_integrals(np.array([3.0]), 6)[:, 0], np.eye(7)[0], atol=1e-12)


def test_two_interval_gauss_nodes_in_support():
    mix = Mixture([(0.5, ChebyshevU(-1, -0.75)), (0.5, ChebyshevU(0.75, 1))])
    x = measure_gauss_rule(mix, 8).nodes
    assert np.all(((x >= -1) & (x <= -0.75)) | ((x >= 0.75) & (x <= 1)))


def test_mixture_validation():
    with pytest.raises(ValueError):
        Mixture([(0.5, ChebyshevU(0, 2)), (0.5, ChebyshevU(1, 3))])
    with pytest.raises(ValueError):
        Mixture([(0.5, ChebyshevU(0, 1)), (0.4, Atom(2.0))])
    with pytest.raises(ValueError):
        Mixture([(-0.5, ChebyshevU(0, 1)), (1.5, Atom(2.0))])


def test_parse_measure():
    assert parse_measure("chebT(-1,1)") == ChebyshevT(-1, 1)
    assert parse_measure(" chebU( 0 , 2.5e0 ) ") == ChebyshevU(0, 2.5)
    mix = parse_measure("mix(0.8*chebU(0.3,2)+0.2*atom(1.5))")
    assert isinstance(mix, Mixture)
    assert [w for w, _ in mix.components] == [0.8, 0.2]
    assert parse_measure(repr(mix)).components[1][1].z == 1.5
    for bad in ("chebV(0,1)", "mix(0.5*chebU(0,1)+)", "mix(0.5*chebT(0,1)+0.5*atom(2))"):
        with pytest.raises(ValueError):
            parse_measure(bad)
