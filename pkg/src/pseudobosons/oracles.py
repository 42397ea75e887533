"""Independent numerical oracles used to cross-check the closed forms."""

from __future__ import annotations

import numpy as np
from scipy.integrate import cubature

from .polygauss import PolyGaussFun, pg_conjugate, pg_eval_many, pg_multiply


def quadrature_integral(f: PolyGaussFun, half_width: float = 8.0, rtol: float = 1e-10, atol: float = 1e-13) -> complex:
    """Adaptive cubature of ``f`` over ``[-L, L]^n``."""

    def integrand(x):
        vals = pg_eval_many(f, x)
        return np.stack([vals.real, vals.imag], axis=-1)

    lo = [-half_width] * f.n
    hi = [half_width] * f.n
    res = cubature(integrand, lo, hi, rtol=rtol, atol=atol)
    if res.status != "converged":
        raise RuntimeError(f"cubature did not converge (error estimate {res.error})")
    return complex(res.estimate[0], res.estimate[1])


def quadrature_inner_product(f: PolyGaussFun, g: PolyGaussFun, half_width: float = 8.0) -> complex:
    return quadrature_integral(pg_multiply(pg_conjugate(f), g), half_width)


def central_difference(f: PolyGaussFun, x, j: int, order: int = 1, h: float = 1e-3) -> complex:
    """Fourth-order central difference of ``d^order f / dx_j^order`` (order 1 or 2)."""
    x = np.asarray(x, dtype=float)
    e = np.zeros_like(x)
    e[j] = h
    pts = np.array([x - 2 * e, x - e, x, x + e, x + 2 * e])
    v = pg_eval_many(f, pts)
    if order == 1:
        return complex((v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h))
    if order == 2:
        return complex((-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h))
    raise ValueError("order must be 1 or 2")
