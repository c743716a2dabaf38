import tracemalloc

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from specquad.moments import (
    chebyshev_moments,
    lanczos,
    modified_moments,
    moments_from_cheb,
    moments_from_lanczos,
)
from specquad.operators import dense_operator, diagonal_operator
from specquad.orthopoly import ChebyshevT, ChebyshevU, Mixture, Atom


def unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def dense_moments(A, v, mu, s):
    lam, U = np.linalg.eigh(A)
    w = (U.T @ v) ** 2
    return w @ mu.polys(lam, s).T


def test_modified_moments_single_atom():
    mu = ChebyshevU(-1, 2)
    A = diagonal_operator([0.4, 1.0, -0.2])
    m = modified_moments(A, np.array([1.0, 0.0, 0.0]), 6, mu)
    assert_allclose(m.values, mu.polys(0.4, 6), atol=1e-14)


def test_modified_moments_discrete_orthogonality():
    k = 7
    j = np.arange(1, k + 1)
    A = diagonal_operator(np.cos((2 * j - 1) * np.pi / (2 * k)))
    v = np.full(k, 1 / np.sqrt(k))
    m = modified_moments(A, v, 2 * k - 1, ChebyshevT(-1, 1))
    assert_allclose(m.values[0], 1.0, atol=1e-15)
    assert_allclose(m.values[1:], 0.0, atol=1e-14)


def test_chebyshev_prefix_matches_recurrence():
    rng = np.random.default_rng(2)
    A = diagonal_operator(rng.uniform(-1, 3, 50))
    v = unit(rng, 50)
    k = 9
    n = chebyshev_moments(A, v, k, -1.5, 3.5)
    m = modified_moments(A, v, k, ChebyshevT(-1.5, 3.5))
    assert n.degree == 2 * k
    assert_allclose(n.values[: k + 1], m.values, atol=1e-12)


def test_chebyshev_single_point():
    n = chebyshev_moments(diagonal_operator([0.0]), np.array([1.0]), 3, -1.0, 2.0)
    assert_allclose(n.values, ChebyshevT(-1, 2).polys(0.0, 6), atol=1e-14)
    n = chebyshev_moments(diagonal_operator([1.5]), np.array([1.0]), 1, 0.0, 3.0)
    assert abs(n.values[1]) < 1e-15
    assert_allclose(n.values[2], -np.sqrt(2), atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 64), st.integers(1, 15), st.integers(0, 2**32 - 1))
def test_chebyshev_against_dense(n, k, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    M = (M + M.T) / np.sqrt(8 * n)
    lam = np.linalg.eigvalsh(M)
    a, b = lam[0] - 0.1, lam[-1] + 0.1
    v = unit(rng, n)
    got = chebyshev_moments(dense_operator(M), v, k, a, b).values
    assert_allclose(got, dense_moments(M, v, ChebyshevT(a, b), 2 * k), atol=1e-10)


def test_lanczos_diag_123():
    T = lanczos(diagonal_operator([1.0, 2.0, 3.0]), np.ones(3), 3)
    assert T.order == 3
    from specquad.tridiag import symtrid_eigen

    assert_allclose(symtrid_eigen(T.block(3)).eigenvalues, [1, 2, 3], atol=1e-14)


def test_lanczos_breakdown():
    T = lanczos(dense_operator(2.5 * np.eye(4)), np.array([1.0, 2.0, 0.0, -1.0]), 3)
    assert T.invariant
    assert T.order == 1
    assert_allclose(T.alphas, [2.5], rtol=1e-14)


def test_lanczos_orthonormal_basis():
    rng = np.random.default_rng(0)
    A = diagonal_operator(rng.uniform(-1, 1, 300))
    T, Q = lanczos(A, unit(rng, 300), 40, reorth=True, return_basis=True)
    assert_allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-10)
    assert T.extended


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 40), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_lanczos_power_moments(n, k, seed):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-1, 1, n)
    v = unit(rng, n)
    T = lanczos(diagonal_operator(lam), v, k, reorth=True)
    Tm = T.block(T.order).to_dense()
    kk = T.order if not T.invariant else n
    for i in range(2 * min(k, kk)):
        e = np.linalg.matrix_power(Tm, i)[0, 0]
        assert abs(e - np.sum(v**2 * lam**i)) <= 1e-10


def test_moments_from_cheb_identity_path():
    rng = np.random.default_rng(1)
    A = diagonal_operator(rng.uniform(0, 1, 30))
    v = unit(rng, 30)
    m = moments_from_cheb(A, v, 7, ChebyshevT(-0.1, 1.1), -0.1, 1.1)
    n = chebyshev_moments(A, v, 4, -0.1, 1.1)
    assert_array_equal(m.values, n.values[:8])
    assert len(m) == 8


def test_moments_from_cheb_chebyshev_U():
    rng = np.random.default_rng(7)
    A = diagonal_operator(rng.uniform(-1, 1, 50))
    v = unit(rng, 50)
    mu = ChebyshevU(-1.0, 1.0)
    s = 24
    m = moments_from_cheb(A, v, s, mu, -1.05, 1.05)
    assert_allclose(m.values, modified_moments(A, v, s, mu).values, atol=1e-10)


def test_moments_from_lanczos_single_atom():
    mu = ChebyshevU(-2, 2)
    m = moments_from_lanczos(diagonal_operator([0.7, 0.1]), np.array([1.0, 0.0]), 9, mu)
    assert_allclose(m.values, mu.polys(0.7, 9), atol=1e-13)


def test_moments_from_lanczos_matches_direct():
    rng = np.random.default_rng(11)
    A = diagonal_operator(rng.uniform(-1, 1, 50))
    v = unit(rng, 50)
    mu = ChebyshevT(-1, 1)
    for s in (1, 2, 13, 30):
        got = moments_from_lanczos(A, v, s, mu, reorth=True).values
        assert_allclose(got, modified_moments(A, v, s, mu).values, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(5, 30), st.integers(0, 2**32 - 1))
def test_three_paths_agree(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    M = (M + M.T) / np.sqrt(8 * n)
    A = dense_operator(M)
    v = unit(rng, n)
    lam = np.linalg.eigvalsh(M)
    a, b = lam[0] - 0.05, lam[-1] + 0.05
    mu = Mixture([(0.6, ChebyshevU(a, 0.5 * (a + b))), (0.4, ChebyshevU(0.5 * (a + b) + 0.01, b + 0.01))])
    s = 12
    direct = modified_moments(A, v, s, mu).values
    cheb = moments_from_cheb(A, v, s, mu, a, b).values
    lanc = moments_from_lanczos(A, v, s, mu, reorth=True).values
    scale = max(1.0, np.abs(direct).max())
    assert_allclose(cheb, direct, atol=1e-8 * scale)
    assert_allclose(lanc, direct, atol=1e-8 * scale)


def test_moments_with_atom_mixture():
    mu = Mixture([(0.8, ChebyshevU(0.0, 2.0)), (0.2, Atom(2.5))])
    rng = np.random.default_rng(3)
    A = diagonal_operator(np.concatenate([rng.uniform(0, 2, 20), [2.5] * 5]))
    v = unit(rng, 25)
    s = 10
    direct = modified_moments(A, v, s, mu).values
    assert_allclose(moments_from_lanczos(A, v, s, mu, reorth=True).values, direct, atol=1e-9)


def _peak_vectors(fn, n):
    tracemalloc.start()
    tracemalloc.reset_peak()
    base = tracemalloc.get_traced_memory()[0]
    fn()
    peak = tracemalloc.get_traced_memory()[1]
    tracemalloc.stop()
    return (peak - base) / (8 * n)


@pytest.mark.parametrize("which", ["modified", "chebyshev", "lanczos"])
def test_memory_is_bounded(which):
    n = 200_000
    A = diagonal_operator(np.linspace(-1, 1, n))
    v = np.full(n, 1 / np.sqrt(n))
    mu = ChebyshevT(-1, 1)
    fns = {
        "modified": lambda: modified_moments(A, v, 20, mu),
        "chebyshev": lambda: chebyshev_moments(A, v, 20, -1, 1),
        "lanczos": lambda: lanczos(A, v, 20),
    }
    assert _peak_vectors(fns[which], n) <= 4.0
