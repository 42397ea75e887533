"""Closed-form integrals of polynomial-times-Gaussian functions.

``int exp(-x^T M x - v^T x) dx`` is evaluated with a continuously tracked
branch of ``det(M)^(-1/2)``; polynomial moments are obtained by recentering
at the Gaussian mean and contracting with centered moments from the
Isserlis (Wick) pairing recursion.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import IntegrabilityError, MomentCapError, NumericalConsistencyError
from .polygauss import PD_ATOL, MultiIndex, PolyGaussFun, pg_conjugate, pg_multiply

MOMENT_CAP = 64
NORM_IMAG_RTOL = 1e-10


def _check_pd(M: np.ndarray) -> None:
    lam = np.linalg.eigvalsh(0.5 * (M.real + M.real.T))
    if lam[0] <= PD_ATOL:
        raise IntegrabilityError(f"real part of M not positive definite (min eigenvalue {lam[0]:.3g})")


def inv_sqrt_det(M: np.ndarray, max_halvings: int = 40) -> complex:
    """``det(M)^(-1/2)`` continued from ``det(Re M) > 0`` along ``Re M + i t Im M``.

    The step is halved whenever the phase of the determinant moves by more
    than ``pi/2`` between consecutive points.
    """
    M = np.asarray(M, dtype=complex)
    _check_pd(M)
    R, I = M.real, M.imag
    d0 = np.linalg.det(R)
    phase = 0.0
    prev = complex(d0)
    t, step = 0.0, 1.0 / 16
    halvings = 0
    while t < 1.0:
        t_next = min(1.0, t + step)
        d = complex(np.linalg.det(R + 1j * t_next * I))
        jump = np.angle(d / prev)
        if abs(jump) > np.pi / 2:
            halvings += 1
            if halvings > max_halvings:
                raise NumericalConsistencyError("determinant phase tracking did not converge")
            step /= 2
            continue
        phase += jump
        prev, t = d, t_next
    return abs(prev) ** -0.5 * np.exp(-0.5j * phase)


def gaussian_base_integral(M, v) -> complex:
    """``int_{R^n} exp(-x^T M x - v^T x) dx``."""
    M = np.asarray(M, dtype=complex)
    v = np.asarray(v, dtype=complex).reshape(-1)
    n = M.shape[0]
    quad = 0.25 * v @ np.linalg.solve(M, v)
    return complex(np.pi ** (n / 2) * inv_sqrt_det(M) * np.exp(quad))


@dataclass(frozen=True)
class MomentContext:
    """Gaussian weight ``exp(-x^T M x - v^T x)`` with its mean and covariance.

    ``base`` is the zeroth moment, ``mean = -M^{-1} v / 2`` and
    ``cov = M^{-1} / 2``.
    """

    M: np.ndarray
    v: np.ndarray
    base: complex
    mean: np.ndarray
    cov: np.ndarray

    @classmethod
    def from_exponent(cls, M, v) -> MomentContext:
        M = np.asarray(M, dtype=complex)
        v = np.asarray(v, dtype=complex).reshape(-1)
        _check_pd(M)
        Minv = np.linalg.inv(M)
        cov = 0.5 * Minv
        cov = 0.5 * (cov + cov.T)
        return cls(M, v, gaussian_base_integral(M, v), -0.5 * Minv @ v, cov)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def raw_moments(self, shape) -> np.ndarray:
        """Table ``m[alpha] = int x^alpha w(x) dx`` for ``alpha < shape`` entrywise."""
        shape = tuple(int(s) for s in shape)
        central = centered_moment_table(self.cov, shape)
        table = central
        # recentering x = mean + y is a binomial transform along each axis
        for j, size in enumerate(shape):
            L = np.zeros((size, size), dtype=complex)
            for a in range(size):
                for b in range(a + 1):
                    L[a, b] = comb(a, b) * self.mean[j] ** (a - b)
            table = np.moveaxis(np.tensordot(L, np.moveaxis(table, j, 0), axes=(1, 0)), 0, j)
        return self.base * table


_cache_lock = threading.Lock()


def _pair_moment(cov_key: tuple, gamma: MultiIndex) -> complex:
    return _pair_moment_cached(cov_key, gamma)


@lru_cache(maxsize=200_000)
def _pair_moment_cached(cov_key: tuple, gamma: MultiIndex) -> complex:
    total = sum(gamma)
    if total == 0:
        return 1.0 + 0j
    if total % 2:
        return 0j
    n = len(gamma)
    cov = np.array(cov_key, dtype=complex).reshape(n, n)
    i = next(k for k, g in enumerate(gamma) if g)
    rest = list(gamma)
    rest[i] -= 1
    acc = 0j
    # pair one factor of y_i with each remaining factor
    for j in range(n):
        if rest[j] == 0 or cov[i, j] == 0:
            continue
        sub = rest.copy()
        sub[j] -= 1
        acc += rest[j] * cov[i, j] * _pair_moment_cached(cov_key, tuple(sub))
    return acc


def wick_moment(cov, gamma, cap: int = MOMENT_CAP) -> complex:
    """Centered Gaussian moment ``E[y^gamma]`` for covariance ``cov`` (Isserlis)."""
    gamma = tuple(int(g) for g in gamma)
    if sum(gamma) > cap:
        raise MomentCapError(f"moment order {sum(gamma)} exceeds cap {cap}")
    cov = np.asarray(cov, dtype=complex)
    key = tuple(complex(c) for c in cov.reshape(-1))
    with _cache_lock:
        return _pair_moment(key, gamma)


def centered_moment_table(cov, shape, cap: int = MOMENT_CAP) -> np.ndarray:
    shape = tuple(int(s) for s in shape)
    if sum(s - 1 for s in shape) > cap:
        raise MomentCapError(f"moment order {sum(s - 1 for s in shape)} exceeds cap {cap}")
    out = np.zeros(shape, dtype=complex)
    for gamma in np.ndindex(*shape):
        if sum(gamma) % 2 == 0:
            out[gamma] = wick_moment(cov, gamma, cap)
    return out


def integrate_polygauss(f: PolyGaussFun) -> complex:
    """``int_{R^n} f(x) dx`` in closed form."""
    total = 0j
    for t in f.terms:
        ctx = MomentContext.from_exponent(t.env.M, t.env.v)
        coeffs = t.poly.to_dense()
        moments = ctx.raw_moments(coeffs.shape)
        total += np.exp(-t.env.s) * np.sum(coeffs * moments)
    return complex(total)


def inner_product(f: PolyGaussFun, g: PolyGaussFun) -> complex:
    """``<f, g> = int conj(f) g``: antilinear in ``f``, linear in ``g``."""
    return integrate_polygauss(pg_multiply(pg_conjugate(f), g))


def norm(f: PolyGaussFun) -> float:
    ff = inner_product(f, f)
    if ff.real < 0 or abs(ff.imag) > NORM_IMAG_RTOL * max(abs(ff.real), 1e-300):
        if abs(ff) > 1e-300:
            raise NumericalConsistencyError(f"<f,f> = {ff} is not a non-negative real")
    return float(np.sqrt(max(ff.real, 0.0)))


def gram_matrix(fs, gs) -> np.ndarray:
    """``G[i, k] = <fs[i], gs[k]>``, batched per envelope pair.

    All members of a ladder family share one envelope, so the whole table
    is a bilinear form ``conj(F) @ H @ G.T`` against one Hankel-type moment
    matrix ``H[alpha, beta] = m(alpha + beta)``.
    """
    fs, gs = list(fs), list(gs)
    if not fs or not gs:
        return np.zeros((len(fs), len(gs)), dtype=complex)
    n = fs[0].n
    out = np.zeros((len(fs), len(gs)), dtype=complex)
    for ef, rows_f in _by_envelope(fs):
        for eg, rows_g in _by_envelope(gs):
            ec = ef.conj()
            ctx = MomentContext.from_exponent(ec.M + eg.M, ec.v + eg.v)
            box_f = _box([p for _, p in rows_f], n)
            box_g = _box([p for _, p in rows_g], n)
            table = ctx.raw_moments([a + b - 1 for a, b in zip(box_f, box_g)])
            idx_f = list(np.ndindex(*box_f))
            idx_g = list(np.ndindex(*box_g))
            H = np.array([[table[tuple(a + b for a, b in zip(al, be))] for be in idx_g] for al in idx_f])
            F = np.array([p.conj().to_dense(box_f).reshape(-1) for _, p in rows_f])
            Gm = np.array([p.to_dense(box_g).reshape(-1) for _, p in rows_g])
            block = F @ H @ Gm.T * np.exp(-(ec.s + eg.s))
            for r, (i, _) in enumerate(rows_f):
                for c, (k, _) in enumerate(rows_g):
                    out[i, k] += block[r, c]
    return out


def _by_envelope(fs):
    """Group ``(function index, polynomial)`` pairs by envelope shape.

    Polynomials are rescaled to the representative envelope's ``s``.
    """
    groups: list[tuple[object, list]] = []
    for i, f in enumerate(fs):
        for t in f.terms:
            for env, rows in groups:
                if env.same_shape(t.env):
                    rows.append((i, t.poly.scale(np.exp(env.s - t.env.s))))
                    break
            else:
                groups.append((t.env, [(i, t.poly)]))
    return groups


def _box(polys, n: int) -> list[int]:
    box = [1] * n
    for p in polys:
        for alpha, _ in p.items():
            for j in range(n):
                box[j] = max(box[j], alpha[j] + 1)
    return box
