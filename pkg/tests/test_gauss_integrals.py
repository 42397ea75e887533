import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given

from conftest import gauss, probe_from_seed, probes, scalars
from pseudobosons.errors import IntegrabilityError, MomentCapError
from pseudobosons.gauss_integrals import (
    MomentContext,
    centered_moment_table,
    gaussian_base_integral,
    gram_matrix,
    inner_product,
    integrate_polygauss,
    inv_sqrt_det,
    norm,
    wick_moment,
)
from pseudobosons.models import hermite_function_2d
from pseudobosons.oracles import quadrature_inner_product, quadrature_integral
from pseudobosons.polygauss import CPoly, pg_conjugate, pg_multiply


def test_base_integral_examples():
    assert abs(gaussian_base_integral(np.eye(2), np.zeros(2)) - math.pi) < 1e-14
    val = gaussian_base_integral(np.array([[1.0]]), np.array([1j]))
    assert abs(val - math.sqrt(math.pi) * math.exp(-0.25)) < 1e-14


def test_base_integral_rejects_non_integrable():
    with pytest.raises(IntegrabilityError):
        gaussian_base_integral(np.array([[1.0, 0], [0, -0.1]]), np.zeros(2))


def test_example1_vacuum_pair_against_quadrature(bundles):
    b = bundles["ex1"]
    exact = inner_product(b.vacuum_phi, b.vacuum_psi)
    quad = quadrature_inner_product(b.vacuum_phi, b.vacuum_psi)
    assert abs(exact - 1) < 1e-12
    assert abs(quad - exact) <= 1e-6 * abs(exact)


def test_inv_sqrt_det_branch_on_diagonal_matrices():
    # for diagonal M the continuous branch is the product of principal roots
    for a, b in [(1 + 5j, 1 + 5j), (0.1 + 3j, 0.2 + 4j), (1 - 9j, 0.5 - 7j)]:
        expected = 1 / (np.sqrt(a) * np.sqrt(b))
        assert abs(inv_sqrt_det(np.diag([a, b])) - expected) < 1e-12 * abs(expected)


def test_base_integral_continuous_over_grid():
    # 100 matrices: 10x10 grid of imaginary parts, each compared with a small perturbation
    rng = np.random.default_rng(0)
    R = np.array([[1.0, 0.3], [0.3, 0.8]])
    S = np.array([[0.5, 1.0], [1.0, -0.7]])
    T = np.array([[1.0, -0.2], [-0.2, 0.4]])
    v = np.array([0.2, -0.1j])
    for s in np.linspace(-6, 6, 10):
        for t in np.linspace(-6, 6, 10):
            M = R + 1j * (s * S + t * T)
            dM = 1e-7j * rng.normal(size=(2, 2))
            dM = dM + dM.T
            a, b = gaussian_base_integral(M, v), gaussian_base_integral(M + dM, v)
            assert abs(a - b) <= 1e-5 * abs(a)


def test_strongly_complex_base_integral_against_quadrature():
    M = np.array([[1.0 + 2.5j, 0.4 - 1j], [0.4 - 1j, 0.8 + 3j]])
    f = gauss(M, np.array([0.3j, -0.2]))
    q = quadrature_integral(f)
    assert abs(integrate_polygauss(f) - q) <= 1e-6 * abs(q)


def test_wick_examples():
    cov = np.array([[0.7, 0.2 + 0.1j], [0.2 + 0.1j, 0.4]])
    assert wick_moment(cov, (2, 0)) == pytest.approx(cov[0, 0])
    assert wick_moment(cov, (1, 1)) == pytest.approx(cov[0, 1])
    assert wick_moment(cov, (4, 0)) == pytest.approx(3 * cov[0, 0] ** 2)
    assert wick_moment(cov, (3, 2)) == 0
    assert wick_moment(cov, (2, 2)) == pytest.approx(cov[0, 0] * cov[1, 1] + 2 * cov[0, 1] ** 2)


def test_wick_cap():
    with pytest.raises(MomentCapError):
        wick_moment(np.eye(2), (40, 26))
    with pytest.raises(MomentCapError):
        wick_moment(np.eye(2), (4, 4), cap=6)


def test_centered_table_matches_wick():
    cov = np.array([[0.6, -0.1j], [-0.1j, 0.3 + 0.2j]])
    table = centered_moment_table(cov, (5, 5))
    for g in [(0, 0), (2, 0), (1, 1), (4, 2), (3, 3)]:
        assert table[g] == pytest.approx(wick_moment(cov, g), rel=1e-13, abs=1e-15)


def test_moment_context_raw_moments_against_quadrature():
    M = np.array([[0.9, 0.1j], [0.1j, 0.6]])
    v = np.array([0.3 - 0.2j, 0.5j])
    ctx = MomentContext.from_exponent(M, v)
    raw = ctx.raw_moments((3, 3))
    for alpha in [(1, 0), (2, 1), (0, 2)]:
        f = gauss(M, v, poly=CPoly(2, {alpha: 1.0}))
        q = quadrature_integral(f)
        assert abs(raw[alpha] - q) <= 1e-8 * max(1, abs(q))


def test_integrate_examples():
    f = gauss(np.eye(2))
    assert integrate_polygauss(f) == pytest.approx(math.pi)
    assert abs(integrate_polygauss(gauss(np.eye(2), poly=CPoly.variable(0, 2)))) < 1e-15
    x1sq = CPoly(2, {(2, 0): 1.0})
    assert integrate_polygauss(gauss(np.eye(2), poly=x1sq)) == pytest.approx(math.pi / 2)


def test_inner_product_examples(bundles):
    phi00 = hermite_function_2d(0, 0)
    assert inner_product(phi00, phi00) == pytest.approx(1)
    for b in bundles.values():
        assert abs(inner_product(b.vacuum_phi, b.vacuum_psi) - 1) < 1e-12


def test_ex2_cross_pairing_vanishes(families):
    fam = families["ex2"]
    assert abs(inner_product(fam.phi[(1, 0)], fam.psi[(0, 1)])) <= 1e-10


def test_norm_examples(bundles):
    f = hermite_function_2d(0, 0)
    assert norm(f) == pytest.approx(1)
    g = probe_from_seed(3)
    assert norm(g.scale(2)) == pytest.approx(2 * norm(g))
    for b in bundles.values():
        assert norm(b.vacuum_phi) * norm(b.vacuum_psi) >= 1 - 1e-12


@given(probes, probes)
def test_conjugate_symmetry(f, g):
    assert abs(inner_product(f, g) - np.conj(inner_product(g, f))) <= 1e-10


@given(probes, probes, probes, scalars, scalars)
def test_sesquilinearity(f, g, h, a, b):
    lhs = inner_product(f.scale(a) + g.scale(b), h)
    rhs = np.conj(a) * inner_product(f, h) + np.conj(b) * inner_product(g, h)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(a) + abs(b))
    lhs = inner_product(h, f.scale(a) + g.scale(b))
    rhs = a * inner_product(h, f) + b * inner_product(h, g)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(a) + abs(b))


def test_inner_product_matches_quadrature_on_random_pairs():
    for seed in range(10):
        f, g = probe_from_seed(100 + seed, 4), probe_from_seed(200 + seed, 4)
        exact = inner_product(f, g)
        q = quadrature_inner_product(f, g)
        assert abs(exact - q) <= 1e-6 * max(abs(q), 1e-3)


def test_gram_matrix_matches_pairwise():
    fs = [probe_from_seed(s) for s in range(4)]
    gs = [probe_from_seed(s) for s in range(10, 13)]
    G = gram_matrix(fs, gs)
    for i, f in enumerate(fs):
        for k, g in enumerate(gs):
            assert abs(G[i, k] - inner_product(f, g)) <= 1e-12


def test_concurrent_inner_products_equal_sequential():
    pairs = [(probe_from_seed(s, 4), probe_from_seed(s + 50, 4)) for s in range(12)]
    seq = [inner_product(f, g) for f, g in pairs]
    with ThreadPoolExecutor(4) as pool:
        par = list(pool.map(lambda p: inner_product(*p), pairs))
    assert seq == par


def test_integral_of_product_equals_inner_product():
    f, g = probe_from_seed(1), probe_from_seed(2)
    assert integrate_polygauss(pg_multiply(pg_conjugate(f), g)) == pytest.approx(inner_product(f, g), rel=1e-13)
