"""Quantified pass/fail checks of the pseudo-bosonic structure of a model.

Each ``check_*`` returns a :class:`CheckResult`; :func:`run_suite` builds a
model, runs the enabled checks and collects a :class:`Report`.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import PseudoBosonError
from .fock import fock_coefficients, hermite_eigenvalues, iter_family_fock, weyl_matrix
from .gauss_integrals import gram_matrix, inner_product, norm
from .models import (
    T_H_TINV_IS_PARTNER,
    LadderFamily,
    ModelBundle,
    build_model,
    generate_family,
)
from .oracles import quadrature_inner_product
from .polygauss import CPoly, GaussEnvelope, PolyGaussFun, PolyGaussTerm
from .weyl import explin_apply, explin_conjugate_weyl, explin_inverse, max_coeff_deviation, w_adjoint, w_apply

CHECKS = (
    "ccr",
    "vacuum",
    "biorthogonality",
    "eigen",
    "intertwining",
    "theta_conjugation",
    "quasi_basis",
    "riesz_growth",
)

DEFAULT_TOLERANCES = {
    "ccr": 1e-9,
    "vacuum": 1e-10,
    "biorthogonality": 1e-8,
    "eigen": 1e-8,
    "eigen_real": 1e-12,
    "eigen_oracle": 1e-6,
    "intertwining": 1e-10,
    "theta_conjugation": 1e-8,
    "quasi_basis": 1e-4,
    "quasi_basis_quadrature": 1e-6,
    "riesz_lower": 1e-10,
}

DEFAULT_SEED = 42
QB_NMAX = 40
QB_TAIL = 5
#: increases smaller than this (relative to the probe scale) count as rounding
MONOTONE_FLOOR = 64 * np.finfo(float).eps


@dataclass
class CheckResult:
    """Outcome of one check.

    ``passed`` holds exactly when ``max_abs_deviation <= tolerance`` and
    every entry of ``parts`` (auxiliary measures with their own
    tolerances) passes as well.
    """

    name: str
    max_abs_deviation: float
    tolerance: float
    details: list[tuple[tuple, float]] = field(default_factory=list)
    parts: dict[str, tuple[float, float]] = field(default_factory=dict)
    series: dict[str, list[float]] = field(default_factory=dict)
    passed: bool = False

    def __post_init__(self):
        self.max_abs_deviation = float(self.max_abs_deviation)
        self.tolerance = float(self.tolerance)
        self.passed = bool(
            self.max_abs_deviation <= self.tolerance
            and all(dev <= tol for dev, tol in self.parts.values())
        )


@dataclass
class Report:
    model: str
    params: dict
    nmax: int
    results: list[CheckResult] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(r.passed for r in self.results)

    @property
    def failures(self) -> int:
        failed = sum(not r.passed for r in self.results)
        return failed if failed or self.error is None else 1

    def result(self, name: str) -> CheckResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


# --- probes -------------------------------------------------------------------------


def random_probe(rng: np.random.Generator, n: int = 2, degree: int = 3) -> PolyGaussFun:
    """Unit-norm random polynomial times a random complex Gaussian."""
    Q = rng.normal(size=(n, n))
    M = 0.35 * np.eye(n) + 0.1 * (Q @ Q.T) / n
    S = rng.normal(size=(n, n))
    M = M + 0.1j * (S + S.T) / 2
    v = 0.5 * (rng.normal(size=n) + 1j * rng.normal(size=n))
    terms = {}
    for alpha in np.ndindex(*([degree + 1] * n)):
        if sum(alpha) <= degree:
            terms[alpha] = complex(rng.normal(), rng.normal()) / (1 + sum(alpha))
    f = PolyGaussFun(n, [PolyGaussTerm(CPoly(n, terms), GaussEnvelope(M, v))])
    return f.scale(1.0 / norm(f))


def random_probes(count: int = 10, seed: int | None = None, n: int = 2, degree: int = 3) -> list[PolyGaussFun]:
    rng = np.random.default_rng(resolve_seed(seed))
    return [random_probe(rng, n, degree) for _ in range(count)]


def resolve_seed(seed: int | None = None) -> int:
    if seed is not None:
        return int(seed)
    return int(os.environ.get("PB_SEED", DEFAULT_SEED))


def displaced_gaussian(d: Sequence[float]) -> PolyGaussFun:
    """Normalized unit-width Gaussian centred at the real point ``d``."""
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    f = PolyGaussFun.gaussian(0.5 * np.eye(n), -d, 0.5 * d @ d)
    return f.scale(np.pi ** (-n / 4))


DEFAULT_QB_DISPLACEMENTS = ((0.0, 0.0), (0.5, -0.3), (1.0, 0.5))


def default_qb_probes() -> list[PolyGaussFun]:
    return [displaced_gaussian(d) for d in DEFAULT_QB_DISPLACEMENTS]


# --- checks ---------------------------------------------------------------------------


def check_ccr(bundle: ModelBundle, probes: Sequence[PolyGaussFun] | None = None, tol: float = DEFAULT_TOLERANCES["ccr"]) -> CheckResult:
    """``||(a_j b_k - b_k a_j - delta_jk) f|| / ||f||`` over probes."""
    probes = list(probes) if probes is not None else random_probes()
    details = []
    for p_idx, f in enumerate(probes):
        nf = norm(f)
        for j, aj in enumerate(bundle.a):
            for k, bk in enumerate(bundle.b):
                r = w_apply(aj, w_apply(bk, f)) - w_apply(bk, w_apply(aj, f))
                if j == k:
                    r = r - f
                details.append(((j + 1, k + 1, p_idx), norm(r) / nf))
    dev = max(d for _, d in details)
    return CheckResult("ccr", dev, tol, details)


def check_vacuum(bundle: ModelBundle, tol: float = DEFAULT_TOLERANCES["vacuum"]) -> CheckResult:
    """Annihilation residuals of both vacua, relative to the vacuum norms."""
    phi, psi = bundle.vacuum_phi, bundle.vacuum_psi
    n_phi, n_psi = norm(phi), norm(psi)
    details = []
    for j, aj in enumerate(bundle.a):
        details.append((("a", j + 1), norm(w_apply(aj, phi)) / n_phi))
    for j, bj in enumerate(bundle.b):
        details.append((("b_dag", j + 1), norm(w_apply(w_adjoint(bj), psi)) / n_psi))
    return CheckResult("vacuum", max(d for _, d in details), tol, details)


def check_biorthogonality(family: LadderFamily, tol: float = DEFAULT_TOLERANCES["biorthogonality"]) -> CheckResult:
    idx = family.indices()
    G = gram_matrix([family.phi[k] for k in idx], [family.psi[k] for k in idx])
    E = np.abs(G - np.eye(len(idx)))
    details = [((idx[i], idx[k]), float(E[i, k])) for i in range(len(idx)) for k in range(len(idx)) if E[i, k] > tol / 10]
    return CheckResult("biorthogonality", float(E.max()), tol, details,
                       series={"diagonal": [float(abs(G[i, i])) for i in range(len(idx))]})


def check_eigen(
    bundle: ModelBundle,
    family: LadderFamily,
    tol: float = DEFAULT_TOLERANCES["eigen"],
    real_tol: float = DEFAULT_TOLERANCES["eigen_real"],
    oracle_tol: float | None = DEFAULT_TOLERANCES["eigen_oracle"],
    oracle_levels: int = 30,
    oracle_count: int = 6,
) -> CheckResult:
    """Eigen-equation residuals for ``H`` on ``phi_n`` and ``H^dag`` on ``psi_n``.

    Parts: the imaginary part of each ``E_n`` and, unless ``oracle_tol`` is
    ``None``, the distance of the lowest eigenvalues from a truncated
    Hermite-basis diagonalization.
    """
    H = bundle.H
    Hd = w_adjoint(H)
    details = []
    imag = 0.0
    for k in family.indices():
        E = complex(bundle.eigen(*k))
        imag = max(imag, abs(E.imag))
        phi, psi = family.phi[k], family.psi[k]
        r1 = norm(w_apply(H, phi) - phi.scale(E)) / norm(phi)
        r2 = norm(w_apply(Hd, psi) - psi.scale(E)) / norm(psi)
        details.append(((k, "H"), r1))
        details.append(((k, "H_dag"), r2))
    parts = {"eigenvalue_imag": (imag, real_tol)}
    series = {}
    if oracle_tol is not None:
        ev = hermite_eigenvalues(H, oracle_levels, oracle_count)
        levels = max(2 * oracle_count, 8)
        exact = sorted(
            (complex(bundle.eigen(n1, L - n1)) for L in range(levels) for n1 in range(L + 1)),
            key=lambda z: z.real,
        )[:oracle_count]
        dev = float(np.max(np.abs(np.sort_complex(ev) - np.sort_complex(np.array(exact)))))
        parts["hermite_oracle"] = (dev, oracle_tol)
        series["oracle_eigenvalues"] = [float(z.real) for z in np.sort_complex(ev)]
        series["formula_eigenvalues"] = [z.real for z in exact]
    return CheckResult("eigen", max(d for _, d in details), tol, details, parts, series)


def check_intertwining(bundle: ModelBundle, tol: float = DEFAULT_TOLERANCES["intertwining"]) -> CheckResult:
    """Coefficient deviation of the conjugated Hamiltonian and the generator relations."""
    if bundle.orientation == T_H_TINV_IS_PARTNER:
        main = max_coeff_deviation(explin_conjugate_weyl(bundle.T, bundle.H), bundle.h_ref)
    else:
        main = max_coeff_deviation(explin_conjugate_weyl(bundle.T, bundle.h_ref), bundle.H)
    details = [((bundle.orientation,), main)]
    for label, src, target in bundle.relations:
        details.append(((label,), max_coeff_deviation(explin_conjugate_weyl(bundle.T, src), target)))
    return CheckResult("intertwining", max(d for _, d in details), tol, details)


def check_theta_conjugation(
    bundle: ModelBundle,
    family: LadderFamily,
    probes: Sequence[PolyGaussFun] | None = None,
    tol: float = DEFAULT_TOLERANCES["theta_conjugation"],
) -> CheckResult:
    """``psi_n = Theta phi_n``, ``N_j = Theta^-1 N_j^dag Theta`` and ``<f, Theta f> > 0``."""
    probes = list(probes) if probes is not None else random_probes()
    theta = bundle.theta
    theta_inv = explin_inverse(theta)
    details = []
    for k in family.indices():
        psi = family.psi[k]
        details.append(((k,), norm(psi - explin_apply(theta, family.phi[k])) / norm(psi)))
    n_dev = 0.0
    a_dev = 0.0
    bad_positivity = 0
    min_pos = math.inf
    for f in probes:
        scale = norm(f)
        theta_f = explin_apply(theta, f)
        for Nj, aj, bj in zip(bundle.N, bundle.a, bundle.b):
            lhs = w_apply(Nj, f)
            rhs = explin_apply(theta_inv, w_apply(w_adjoint(Nj), theta_f))
            n_dev = max(n_dev, norm(lhs - rhs) / max(norm(lhs), scale))
            lhs = w_apply(aj, f)
            rhs = explin_apply(theta_inv, w_apply(w_adjoint(bj), theta_f))
            a_dev = max(a_dev, norm(lhs - rhs) / max(norm(lhs), scale))
        q = inner_product(f, theta_f)
        min_pos = min(min_pos, q.real / scale**2)
        if not (q.real > 0 and abs(q.imag) <= 1e-10 * abs(q)):
            bad_positivity += 1
    parts = {
        "number_intertwining": (n_dev, tol),
        "a_conjugacy": (a_dev, tol),
        "positivity_failures": (float(bad_positivity), 0.0),
    }
    series = {"min_positivity": [min_pos]}
    return CheckResult("theta_conjugation", max(d for _, d in details), tol, details, parts, series)


def _fock_size(nmax: int) -> int:
    return nmax + 30


def quasi_basis_sums(
    bundle: ModelBundle, probes: Sequence[PolyGaussFun], nmax: int = QB_NMAX, size: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Per-level contributions to both resolution sums.

    Returns ``(direct, swapped)`` of shape ``(nmax + 1, p, p)`` with
    ``direct[L, i, k] = sum_{n1+n2=L} <f_i, psi_n><phi_n, f_k>`` and the
    swapped form using ``<f_i, phi_n><psi_n, f_k>``.
    """
    size = size or _fock_size(nmax)
    P = np.array([fock_coefficients(f, size) for f in probes])
    p = len(probes)
    direct = np.zeros((nmax + 1, p, p), dtype=complex)
    swapped = np.zeros_like(direct)
    for (n1, n2), phi, psi in iter_family_fock(bundle, nmax, size):
        f_psi = P.conj() @ psi
        f_phi = P.conj() @ phi
        direct[n1 + n2] += np.outer(f_psi, f_phi.conj())
        swapped[n1 + n2] += np.outer(f_phi, f_psi.conj())
    return direct, swapped


def _tail_increase(seq: np.ndarray, tail: int, floor: float) -> float:
    last = seq[-tail:]
    return float(max(0.0, np.max(np.diff(last) - floor))) if len(last) > 1 else 0.0


def check_quasi_basis(
    bundle: ModelBundle,
    probes: Sequence[PolyGaussFun] | None = None,
    nmax: int = QB_NMAX,
    tol: float = DEFAULT_TOLERANCES["quasi_basis"],
    quadrature_tol: float | None = DEFAULT_TOLERANCES["quasi_basis_quadrature"],
    size: int | None = None,
) -> CheckResult:
    """Partial sums ``S_N(f, g)`` of the weak resolution of the identity.

    Passes when ``|S_nmax - <f, g>| <= tol`` for both orderings and the
    deviation does not increase (beyond rounding) over the last
    ``QB_TAIL`` levels.  ``<f, g>`` is also compared with adaptive
    quadrature unless ``quadrature_tol`` is ``None``.
    """
    probes = list(probes) if probes is not None else default_qb_probes()
    exact = np.array([[inner_product(f, g) for g in probes] for f in probes])
    direct, swapped = quasi_basis_sums(bundle, probes, nmax, size)
    dev_direct = np.abs(np.cumsum(direct, axis=0) - exact).max(axis=(1, 2))
    dev_swapped = np.abs(np.cumsum(swapped, axis=0) - exact).max(axis=(1, 2))
    floor = MONOTONE_FLOOR * (1.0 + float(np.abs(exact).max()))
    details = [((N, "direct"), float(dev_direct[N])) for N in range(nmax + 1)]
    details += [((N, "swapped"), float(dev_swapped[N])) for N in range(nmax + 1)]
    parts = {
        "swapped_order": (float(dev_swapped[-1]), tol),
        "tail_increase": (max(_tail_increase(dev_direct, QB_TAIL, floor), _tail_increase(dev_swapped, QB_TAIL, floor)), 0.0),
    }
    if quadrature_tol is not None:
        qdev = 0.0
        for i, f in enumerate(probes):
            for k, g in enumerate(probes):
                q = quadrature_inner_product(f, g)
                qdev = max(qdev, abs(q - exact[i, k]) / max(abs(exact[i, k]), 1e-300))
        parts["quadrature_rel"] = (qdev, quadrature_tol)
    series = {"direct": dev_direct.tolist(), "swapped": dev_swapped.tolist()}
    return CheckResult("quasi_basis", float(dev_direct[-1]), tol, details, parts, series)


def riesz_sequence(bundle: ModelBundle, nmax: int, size: int | None = None) -> np.ndarray:
    """``g_n = ||phi_(n,n)|| ||psi_(n,n)||`` for ``n = 0..nmax``, in Hermite coordinates.

    The ``(n, n)`` states have total degree ``2n``; the Hermite
    representation keeps their norms accurate where monomial coefficients
    would cancel.
    """
    size = size or 2 * nmax + 40
    up_phi = [weyl_matrix(b, size) for b in bundle.b]
    up_psi = [weyl_matrix(w_adjoint(a), size) for a in bundle.a]
    phi = fock_coefficients(bundle.vacuum_phi, size)
    psi = fock_coefficients(bundle.vacuum_psi, size)
    g = []
    for n in range(nmax + 1):
        if n:
            for j in range(2):
                phi = up_phi[j] @ phi / math.sqrt(n)
                psi = up_psi[j] @ psi / math.sqrt(n)
        g.append(np.linalg.norm(phi) * np.linalg.norm(psi))
    return np.array(g)


def check_riesz_growth(
    bundle: ModelBundle, nmax: int = 8, lower_tol: float = DEFAULT_TOLERANCES["riesz_lower"], size: int | None = None
) -> CheckResult:
    """Growth of ``g_n`` along the diagonal ``(n, n)``, ``n <= nmax``.

    Always ``g_n >= 1``; for non-zero parameters the sequence must strictly
    increase, at zero parameters it must equal one.
    """
    g = riesz_sequence(bundle, nmax, size)
    below = float(max(0.0, np.max(1.0 - g)))
    details = [(((n, n),), float(gn)) for n, gn in enumerate(g)]
    parts = {}
    if bundle.nonzero_parameters:
        parts["non_increasing_steps"] = (float(np.sum(np.diff(g) <= 0)), 0.0)
    else:
        parts["deviation_from_one"] = (float(np.max(np.abs(g - 1.0))), lower_tol)
    return CheckResult("riesz_growth", below, lower_tol, details, parts, {"g": g.tolist()})


# --- suite ------------------------------------------------------------------------------


def run_suite(
    model: str,
    params: dict,
    nmax: int = 8,
    toggles: Sequence[str] | None = None,
    tolerances: dict | None = None,
    qb_nmax: int = QB_NMAX,
    seed: int | None = None,
    oracle: bool = True,
) -> Report:
    """Build the model and run the enabled checks in a fixed order."""
    enabled = list(CHECKS) if toggles is None else [c for c in CHECKS if c in set(toggles)]
    unknown = set(toggles or ()) - set(CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    tols = dict(DEFAULT_TOLERANCES)
    tols.update(tolerances or {})
    report = Report(model, dict(params), nmax)
    t0 = time.perf_counter()
    try:
        bundle = build_model(model, **params)
    except PseudoBosonError as exc:
        report.error = f"{type(exc).__name__}: {exc}"
        report.timings["build"] = time.perf_counter() - t0
        report.results = [
            CheckResult(name, math.inf, tols.get(name, 0.0), [(("error", report.error), math.inf)]) for name in enabled
        ]
        return report
    report.timings["build"] = time.perf_counter() - t0
    if not enabled:
        return report

    probes = random_probes(seed=seed)
    family = None
    if {"biorthogonality", "eigen", "theta_conjugation"} & set(enabled):
        t0 = time.perf_counter()
        family = generate_family(bundle, nmax)
        report.timings["family"] = time.perf_counter() - t0

    def run(name):
        if name == "ccr":
            return check_ccr(bundle, probes, tols["ccr"])
        if name == "vacuum":
            return check_vacuum(bundle, tols["vacuum"])
        if name == "biorthogonality":
            return check_biorthogonality(family, tols["biorthogonality"])
        if name == "eigen":
            return check_eigen(bundle, family, tols["eigen"], tols["eigen_real"],
                               tols["eigen_oracle"] if oracle else None)
        if name == "intertwining":
            return check_intertwining(bundle, tols["intertwining"])
        if name == "theta_conjugation":
            return check_theta_conjugation(bundle, family, probes, tols["theta_conjugation"])
        if name == "quasi_basis":
            return check_quasi_basis(bundle, None, qb_nmax, tols["quasi_basis"],
                                     tols["quasi_basis_quadrature"] if oracle else None)
        if name == "riesz_growth":
            return check_riesz_growth(bundle, nmax, tols["riesz_lower"])
        raise AssertionError(name)

    for name in enabled:
        t0 = time.perf_counter()
        try:
            report.results.append(run(name))
        except PseudoBosonError as exc:
            msg = f"{type(exc).__name__}: {exc}"
            report.results.append(CheckResult(name, math.inf, tols.get(name, 0.0), [(("error", msg), math.inf)]))
        report.timings[name] = time.perf_counter() - t0
    return report


CANONICAL = {
    "ex1": {"eps": 0.5, "xi": 1, "a": 1.0, "b": 1.0},
    "ex2": {"A": 0.3, "B": 0.2},
    "ex3": {"A": 0.3, "B": 0.2, "theta": 0.05, "theta_t": 0.03},
}
