"""Hermite-function (Fock) representation of functions and operators.

Coefficients ``c_m = <Phi_m, f>`` in the orthonormal product Hermite basis
are numerically stable at high excitation where monomial coefficients are
not.  A Gaussian's coefficients come from its Bargmann transform
``K0 exp(z^T R z / 2 + y^T z)`` through the recursion

    c_{m+e_i} = (y_i c_m + sum_j R_ij sqrt(m_j) c_{m-e_j}) / sqrt(m_i + 1).

Operators are mapped with ``x = (A + A^dag)/sqrt(2)`` and
``d = (A - A^dag)/sqrt(2)``; products are formed on a padded space and
then truncated so the kept block is exact.
"""

from __future__ import annotations

import math
from functools import reduce
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from .gauss_integrals import gaussian_base_integral
from .polygauss import GaussEnvelope, PolyGaussFun
from .weyl import WeylOp, w_adjoint


def annihilator(size: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, size, dtype=float)), 1, shape=(size, size), format="csr")


def _quadratures(size: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    A = annihilator(size)
    Ad = A.T.tocsr()
    return ((A + Ad) / math.sqrt(2)).tocsr(), ((A - Ad) / math.sqrt(2)).tocsr()


def _mat_power(Mx: sp.csr_matrix, k: int, size: int) -> sp.csr_matrix:
    out = sp.identity(size, dtype=complex, format="csr")
    for _ in range(k):
        out = out @ Mx
    return out


def weyl_matrix(op: WeylOp, size: int) -> sp.csr_matrix:
    """Matrix of ``op`` on the product basis truncated to ``size`` levels per mode.

    Flattened index is ``m_1 * size**(n-1) + ... + m_n`` (C order).
    """
    pad = size + max(op.degree(), 0) + 1
    X, D = _quadratures(pad)
    cache: dict[tuple[int, int], sp.csr_matrix] = {}

    def factor(a: int, b: int) -> sp.csr_matrix:
        if (a, b) not in cache:
            full = _mat_power(X, a, pad) @ _mat_power(D, b, pad)
            cache[(a, b)] = full[:size, :size].tocsr()
        return cache[(a, b)]

    total = sp.csr_matrix((size**op.n, size**op.n), dtype=complex)
    for (alpha, beta), c in op.items():
        mats = [factor(a, b) for a, b in zip(alpha, beta)]
        total = total + c * reduce(lambda u, v: sp.kron(u, v, format="csr"), mats)
    return total.tocsr()


def gaussian_fock(env: GaussEnvelope, size: int) -> np.ndarray:
    """Hermite coefficients of ``exp(-x^T M x - v^T x - s)``, shape ``(size,)*n``."""
    n = env.n
    Mp = env.M + 0.5 * np.eye(n)
    Minv = np.linalg.inv(Mp)
    R = Minv - np.eye(n)
    y = -Minv @ env.v / math.sqrt(2)
    k0 = np.pi ** (-n / 4) * gaussian_base_integral(Mp, env.v) * np.exp(-env.s)
    c = np.zeros((size,) * n, dtype=complex)
    c[(0,) * n] = k0
    for m in np.ndindex(*c.shape):
        if not any(m):
            continue
        i = next(k for k, e in enumerate(m) if e)
        base = list(m)
        base[i] -= 1
        acc = y[i] * c[tuple(base)]
        for j in range(n):
            if base[j] and R[i, j] != 0:
                lower = base.copy()
                lower[j] -= 1
                acc += R[i, j] * math.sqrt(base[j]) * c[tuple(lower)]
        c[m] = acc / math.sqrt(base[i] + 1)
    return c


def fock_coefficients(f: PolyGaussFun, size: int) -> np.ndarray:
    """Flattened coefficients ``<Phi_m, f>`` for ``m_j < size``."""
    n = f.n
    out = np.zeros(size**n, dtype=complex)
    for t in f.terms:
        deg = max(t.poly.degree(), 0)
        pad = size + deg + 1
        g = gaussian_fock(t.env, pad).reshape(-1)
        z = (0,) * n
        mult = WeylOp(n, {(alpha, z): c for alpha, c in t.poly.items()})
        full = weyl_matrix(mult, pad) @ g
        out += full.reshape((pad,) * n)[tuple(slice(0, size) for _ in range(n))].reshape(-1)
    return out


def iter_family_fock(bundle, nmax: int, size: int) -> Iterator[tuple[tuple[int, int], np.ndarray, np.ndarray]]:
    """Yield ``((n1, n2), phi, psi)`` for ``n1 + n2 <= nmax`` in Hermite coordinates.

    Only the current column seed is kept, so memory stays at a few vectors.
    """
    up_phi = [weyl_matrix(b, size) for b in bundle.b]
    up_psi = [weyl_matrix(w_adjoint(a), size) for a in bundle.a]
    seed_phi = fock_coefficients(bundle.vacuum_phi, size)
    seed_psi = fock_coefficients(bundle.vacuum_psi, size)
    for n2 in range(nmax + 1):
        if n2:
            seed_phi = up_phi[1] @ seed_phi / math.sqrt(n2)
            seed_psi = up_psi[1] @ seed_psi / math.sqrt(n2)
        phi, psi = seed_phi, seed_psi
        yield (0, n2), phi, psi
        for n1 in range(1, nmax - n2 + 1):
            phi = up_phi[0] @ phi / math.sqrt(n1)
            psi = up_psi[0] @ psi / math.sqrt(n1)
            yield (n1, n2), phi, psi


def hermite_eigenvalues(H: WeylOp, levels: int = 30, count: int = 6) -> np.ndarray:
    """Lowest ``count`` eigenvalues (by real part) of ``H`` truncated to ``levels`` per mode."""
    mat = weyl_matrix(H, levels).toarray()
    ev = np.linalg.eigvals(mat)
    return ev[np.argsort(ev.real)][:count]
