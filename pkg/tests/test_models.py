import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import probe_from_seed
from pseudobosons.errors import AssumptionViolation, ParameterError, SingularParameterError
from pseudobosons.gauss_integrals import inner_product, norm
from pseudobosons.models import (
    Ex1Params,
    Ex2Params,
    Ex3Params,
    build_example1,
    build_example2,
    build_example3,
    build_model,
    ex1_operators_from_capitals,
    ex1_operators_xp,
    ex1_vacuum_constants,
    ex3_printed_k,
    generate_family,
    hermite_function_2d,
    solve_vacuum,
)
from pseudobosons.fock import hermite_eigenvalues
from pseudobosons.polygauss import PolyGaussFun, max_coeff_deviation as pg_dev
from pseudobosons.weyl import WeylOp, max_coeff_deviation, w_adjoint, w_apply, w_commutator

I2 = WeylOp.identity(2)


def fun_dev(f, g):
    return pg_dev(f, g) / (1 + max(f.max_coeff(), g.max_coeff()))


# --- parameters --------------------------------------------------------------------


def test_eps_outside_unit_interval():
    with pytest.raises(ParameterError, match="eps"):
        Ex1Params(1.5)


def test_eps_near_singular():
    with pytest.raises(SingularParameterError, match="eps"):
        Ex1Params(0.999)
    Ex1Params(0.998)
    Ex1Params(0.999, eps_guard=1e-4)


@pytest.mark.parametrize("kwargs", [{"xi": 2}, {"a": 0.0}, {"b": float("nan")}])
def test_ex1_other_guards(kwargs):
    with pytest.raises(ParameterError):
        Ex1Params(0.3, **kwargs)


def test_ex3_perturbative_guard():
    with pytest.raises(ParameterError, match="theta_t"):
        Ex3Params(0.3, 0.2, 0.05, 0.3)
    Ex3Params(0.3, 0.2, 0.3, 0.0, guard=0.5)


def test_unknown_model():
    with pytest.raises(ParameterError):
        build_model("ex4")


def test_nondegenerate_flag():
    assert Ex1Params(0.2).nondegenerate and not Ex1Params(0.0).nondegenerate


# --- example 1 ---------------------------------------------------------------------


def test_ex1_eigen_at_zero_eps():
    b = build_example1(Ex1Params(0.0))
    for n1 in range(5):
        for n2 in range(5):
            assert abs(b.eigen(n1, n2) - (2 * (n1 + n2) + 3)) <= 1e-12


def test_ex1_eigen_formula():
    eps, xi = 0.5, -1
    b = build_example1(Ex1Params(eps, xi))
    E = math.sqrt(1 + eps * xi) * 3 + math.sqrt(1 - eps * xi) * 5 + 1 / (1 - eps**2)
    assert b.eigen(1, 2) == pytest.approx(E, abs=1e-14)


def test_ex1_ground_energy_against_hermite_diagonalization(bundles):
    b = bundles["ex1"]
    ev = hermite_eigenvalues(b.H, 30, 1)
    assert abs(ev[0] - b.eigen(0, 0)) <= 1e-6


def test_ex1_operator_forms_agree():
    p = Ex1Params(0.4, -1, 1.0, 1.0)
    caps = ex1_operators_from_capitals(p)[:4]
    for u, v in zip(caps, ex1_operators_xp(p)):
        assert max_coeff_deviation(u, v) <= 1e-14


def test_ex1_operator_forms_with_scales():
    # the capital-variable form does not depend on the scale parameters a, b
    p0, p1 = Ex1Params(0.4, 1, 1.0, 1.0), Ex1Params(0.4, 1, 2.0, 0.7)
    for u, v in zip(ex1_operators_from_capitals(p0)[:4], ex1_operators_from_capitals(p1)[:4]):
        assert max_coeff_deviation(u, v) <= 1e-13


def test_ex1_printed_mode2_prefactor_breaks_ccr():
    p = Ex1Params(0.3, 1, 2.0, 1.0)
    _, a2, _, b2, _, _ = ex1_operators_from_capitals(p, mode2_prefactor="a")
    assert max_coeff_deviation(w_commutator(a2, b2), (p.a**2 / p.b**2) * I2) <= 1e-12
    _, a2, _, b2, _, _ = ex1_operators_from_capitals(p, mode2_prefactor="b")
    assert max_coeff_deviation(w_commutator(a2, b2), I2) <= 1e-12


def test_ex1_shift_printed_versus_derived():
    p = Ex1Params(0.5, 1, 1.0, 1.0)
    b = build_example1(p)
    c = 1 / (1 - p.eps**2)
    assert np.allclose(b.extras["derived_shift"], [1j * p.eps * c, -1j * c])
    assert np.allclose(b.extras["printed_shift"], [1j * (p.eps - 1) * c, 1j * (p.eps + 1) * c])


def test_ex1_vacuum_matches_closed_form():
    for eps, xi in [(0.5, 1), (-0.3, -1), (0.7, -1)]:
        p = Ex1Params(eps, xi)
        k = ex1_vacuum_constants(p)
        a1, a2, b1, b2 = ex1_operators_xp(p)
        phi = solve_vacuum(a1, a2)
        psi = solve_vacuum(w_adjoint(b1), w_adjoint(b2))
        M = 0.5 * np.array([[k["alpha_plus"], xi * k["alpha_minus"]], [xi * k["alpha_minus"], k["alpha_plus"]]])
        v = np.array([k["k_minus"], k["k_plus"]])
        assert np.allclose(phi.terms[0].env.M, M, atol=1e-14) and np.allclose(phi.terms[0].env.v, v, atol=1e-14)
        assert np.allclose(psi.terms[0].env.M, M, atol=1e-14) and np.allclose(psi.terms[0].env.v, -v, atol=1e-14)


def test_ex1_vacuum_at_zero_eps_is_shifted_oscillator():
    phi = build_example1(Ex1Params(0.0)).vacuum_phi
    env = phi.terms[0].env
    assert np.allclose(env.M, 0.5 * np.eye(2)) and np.allclose(env.v, [0, 1j])
    # e^{-x1^2/2} e^{-(x2+i)^2/2} up to a constant
    ref = lambda x: np.exp(-x[0] ** 2 / 2 - (x[1] + 1j) ** 2 / 2)
    r0 = phi([0, 0]) / ref([0, 0])
    for x in ([0.5, -0.2], [1.0, 1.0]):
        assert abs(phi(x) / ref(x) - r0) <= 1e-12 * abs(r0)


# --- example 2 ---------------------------------------------------------------------


def test_ex2_reduces_to_oscillator():
    b = build_example2(Ex2Params(0.0, 0.0))
    phi00 = hermite_function_2d(0, 0)
    assert fun_dev(b.vacuum_phi, phi00) <= 1e-14 and fun_dev(b.vacuum_psi, phi00) <= 1e-14
    assert b.eigen(0, 0) == 1
    fam = generate_family(b, 4)
    for k in fam.indices():
        h = hermite_function_2d(*k)
        assert fun_dev(fam.phi[k], h) <= 1e-12 and fun_dev(fam.psi[k], h) <= 1e-12


def test_ex2_eigen_formula():
    b = build_example2(Ex2Params(0.3, 0.2))
    assert b.eigen(0, 0) == pytest.approx(0.09 + 0.04 + 1)
    assert b.eigen(2, 3) == pytest.approx(5 + 0.13 + 1)


def test_ex2_vacuum_form(bundles):
    b = bundles["ex2"]
    C = 1j * 0.3 - 0.2
    env = b.vacuum_phi.terms[0].env
    assert np.allclose(env.M, 0.5 * np.eye(2)) and np.allclose(env.v, [C, C])


# --- example 3 ---------------------------------------------------------------------


def test_ex3_k_constants_validated(bundles):
    b = bundles["ex3"]
    assert b.extras["k_deviation"] <= 1e-12
    assert not b.notes
    k = ex3_printed_k(Ex3Params(0.3, 0.2, 0.05, 0.03))
    assert np.allclose(k, b.extras["k_derived"], atol=1e-14)


def test_ex3_alpha_vacuum_annihilated(bundles):
    b = bundles["ex3"]
    a1_, a2_ = b.extras["alpha"]
    f = PolyGaussFun.gaussian(0.5 * np.eye(2), [a1_, a2_])
    for aj in b.a:
        assert norm(w_apply(aj, f)) <= 1e-10 * norm(f)
    g = PolyGaussFun.gaussian(0.5 * np.eye(2), [-a1_, -a2_])
    for bj in b.b:
        assert norm(w_apply(w_adjoint(bj), g)) <= 1e-10 * norm(g)


def test_ex3_first_order_hamiltonian_differs_at_second_order():
    devs = []
    for t in (0.1, 0.05, 0.025):
        b = build_example3(Ex3Params(0.3, 0.2, t, 0.6 * t))
        devs.append(max_coeff_deviation(b.extras["hamiltonians"]["first_order"], b.H))
    assert devs[0] / devs[1] == pytest.approx(4, rel=0.05)
    assert devs[1] / devs[2] == pytest.approx(4, rel=0.05)
    b = build_example3(Ex3Params(0.3, 0.2, 0.0, 0.0))
    assert max_coeff_deviation(b.extras["hamiltonians"]["first_order"], b.H) <= 1e-14


def test_ex3_reduces_to_ex2():
    A, B = 0.3, 0.2
    e3 = build_example3(Ex3Params(A, B, 0.0, 0.0))
    e2 = build_example2(Ex2Params(A, B))
    assert max_coeff_deviation(e3.H, e2.H) <= 1e-12
    assert fun_dev(e3.vacuum_phi, e2.vacuum_phi) <= 1e-12
    assert fun_dev(e3.vacuum_psi, e2.vacuum_psi) <= 1e-12
    f3, f2 = generate_family(e3, 4), generate_family(e2, 4)
    for k in f3.indices():
        L = sum(k)
        level = [m for m in f2.indices() if sum(m) == L]
        for fam_vec, dual, basis in ((f3.phi[k], f2.psi, f2.phi), (f3.psi[k], f2.phi, f2.psi)):
            proj = PolyGaussFun.zero(2)
            for m in level:
                proj = proj + basis[m].scale(inner_product(dual[m], fam_vec))
            assert norm(fam_vec - proj) <= 1e-10 * norm(fam_vec)


# --- vacuum solver -----------------------------------------------------------------


def test_solve_vacuum_standard():
    r2 = math.sqrt(2)
    c = [(WeylOp.x(j, 2) + WeylOp.d(j, 2)) / r2 for j in range(2)]
    f = solve_vacuum(*c)
    assert np.allclose(f.terms[0].env.M, 0.5 * np.eye(2)) and np.allclose(f.terms[0].env.v, 0)


def test_solve_vacuum_failures():
    up = [WeylOp.x(j, 2) - WeylOp.d(j, 2) for j in range(2)]
    with pytest.raises(AssumptionViolation):
        solve_vacuum(*up)
    with pytest.raises(AssumptionViolation):
        solve_vacuum(WeylOp.x(0, 2) + WeylOp.d(0, 2))
    with pytest.raises(AssumptionViolation):
        solve_vacuum(WeylOp.x(0, 2), WeylOp.x(1, 2))
    with pytest.raises(AssumptionViolation):
        solve_vacuum(WeylOp.d(0, 2) + WeylOp.x(1, 2), WeylOp.d(1, 2) + 2 * WeylOp.x(0, 2))


# --- ladder families ---------------------------------------------------------------


@pytest.mark.parametrize("model", ["ex1", "ex2", "ex3"])
def test_ladder_relations(bundles, families, model):
    b, fam = bundles[model], families[model]
    for (n1, n2) in fam.indices():
        phi = fam.phi[(n1, n2)]
        if n1 + n2 < fam.nmax:
            up = w_apply(b.b[0], phi)
            assert fun_dev(up, fam.phi[(n1 + 1, n2)].scale(math.sqrt(n1 + 1))) <= 1e-9
        down = w_apply(b.a[0], phi)
        target = fam.phi[(n1 - 1, n2)].scale(math.sqrt(n1)) if n1 else PolyGaussFun.zero(2)
        assert norm(down - target) <= 1e-9 * norm(phi)


@pytest.mark.parametrize("model", ["ex1", "ex2", "ex3"])
def test_number_and_hamiltonian_eigen_relations(bundles, families, model):
    b, fam = bundles[model], families[model]
    Hd = w_adjoint(b.H)
    for k in fam.indices():
        phi, psi = fam.phi[k], fam.psi[k]
        for j, N in enumerate(b.N):
            assert norm(w_apply(N, phi) - phi.scale(k[j])) <= 1e-8 * norm(phi)
            assert norm(w_apply(w_adjoint(N), psi) - psi.scale(k[j])) <= 1e-8 * norm(psi)
        E = b.eigen(*k)
        assert norm(w_apply(b.H, phi) - phi.scale(E)) <= 1e-8 * norm(phi)
        assert norm(w_apply(Hd, psi) - psi.scale(E)) <= 1e-8 * norm(psi)


def test_box_family_shape(bundles):
    fam = generate_family(bundles["ex2"], 2, "box")
    assert sorted(fam.phi) == [(i, j) for i in range(3) for j in range(3)]
    with pytest.raises(ValueError):
        generate_family(bundles["ex2"], 2, "disk")


def test_gauge_convention(bundles):
    for b in bundles.values():
        assert norm(b.vacuum_phi) == pytest.approx(1, abs=1e-14)
        lead = b.vacuum_phi.terms[0].poly.terms[(0, 0)]
        assert lead.real > 0 and abs(lead.imag) <= 1e-15 * abs(lead)
        assert abs(inner_product(b.vacuum_phi, b.vacuum_psi) - 1) <= 1e-13


# --- randomized bundle invariants ----------------------------------------------------


param_points = st.one_of(
    st.builds(lambda e, x: ("ex1", {"eps": e, "xi": x}), st.floats(-0.95, 0.95), st.sampled_from([-1, 1])),
    st.builds(lambda a, b: ("ex2", {"A": a, "B": b}), st.floats(-1, 1), st.floats(-1, 1)),
    st.builds(lambda a, b, t, u: ("ex3", {"A": a, "B": b, "theta": t, "theta_t": u}),
              st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.2, 0.2), st.floats(-0.2, 0.2)),
)


@settings(max_examples=15)
@given(param_points)
def test_bundle_invariants_random_parameters(point):
    model, params = point
    b = build_model(model, **params)
    for j in range(2):
        for k in range(2):
            expected = I2 if j == k else WeylOp(2)
            assert max_coeff_deviation(w_commutator(b.a[j], b.b[k]), expected) <= 1e-10
        assert norm(w_apply(b.a[j], b.vacuum_phi)) <= 1e-10
        assert norm(w_apply(w_adjoint(b.b[j]), b.vacuum_psi)) <= 1e-10 * norm(b.vacuum_psi)
    assert abs(inner_product(b.vacuum_phi, b.vacuum_psi) - 1) <= 1e-10
    f = probe_from_seed(17)
    r = w_apply(b.a[0], w_apply(b.b[0], f)) - w_apply(b.b[0], w_apply(b.a[0], f)) - f
    assert norm(r) <= 1e-9 * norm(f)
