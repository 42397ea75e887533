"""Complex polynomials times complex Gaussians on R^n.

Every wavefunction handled by the package has the form

    f(x) = sum_k P_k(x) exp(-x^T M_k x - v_k^T x - s_k)

with ``Re M_k`` positive definite.  The class is closed under multiplication
by polynomials, differentiation, complex translation, multiplication by
``exp(u^T x + c)`` and complex conjugation, so all the ladder, number and
intertwining operators used by the models act on it exactly (up to
floating-point rounding of the coefficients).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, IntegrabilityError

MultiIndex = tuple[int, ...]

#: relative threshold below which polynomial coefficients are dropped
PRUNE_RTOL = 1e-15
#: envelopes whose (M, v) agree to this relative precision are merged
MERGE_RTOL = 1e-12
#: smallest admissible eigenvalue of sym(Re M)
PD_ATOL = 1e-12


def _check_index(alpha: Sequence[int], n: int) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise DimensionError(f"multi-index {alpha} does not have length {n}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index {alpha} has negative entries")
    return alpha


def unit_index(j: int, n: int) -> MultiIndex:
    return tuple(1 if k == j else 0 for k in range(n))


class CPoly:
    """Sparse polynomial in ``n`` variables with complex coefficients.

    Instances are treated as immutable; every operation returns a new
    polynomial with negligible coefficients pruned.
    """

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping[Sequence[int], complex] | None = None, prune: bool = True):
        self.n = int(n)
        raw: dict[MultiIndex, complex] = {}
        for alpha, c in (terms or {}).items():
            alpha = _check_index(alpha, self.n)
            raw[alpha] = raw.get(alpha, 0j) + complex(c)
        self._terms = _prune(raw) if prune else {k: c for k, c in raw.items() if c != 0}

    @classmethod
    def _trusted(cls, n: int, raw: dict[MultiIndex, complex]) -> CPoly:
        """Wrap an internally produced coefficient map (valid indices, complex values)."""
        obj = cls.__new__(cls)
        obj.n = n
        obj._terms = _prune(raw)
        return obj

    # construction helpers
    @classmethod
    def constant(cls, c: complex, n: int) -> CPoly:
        return cls(n, {(0,) * n: c})

    @classmethod
    def one(cls, n: int) -> CPoly:
        return cls.constant(1.0, n)

    @classmethod
    def variable(cls, j: int, n: int) -> CPoly:
        return cls(n, {unit_index(j, n): 1.0})

    @property
    def terms(self) -> dict[MultiIndex, complex]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(a) for a in self._terms), default=-1)

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def _same_n(self, other: CPoly) -> None:
        if self.n != other.n:
            raise DimensionError(f"polynomials in {self.n} and {other.n} variables")

    def __add__(self, other: CPoly) -> CPoly:
        self._same_n(other)
        out = dict(self._terms)
        for a, c in other._terms.items():
            out[a] = out.get(a, 0j) + c
        return CPoly._trusted(self.n, out)

    def __neg__(self) -> CPoly:
        return self.scale(-1.0)

    def __sub__(self, other: CPoly) -> CPoly:
        return self + (-other)

    def scale(self, c: complex) -> CPoly:
        c = complex(c)
        if c == 0:
            return CPoly(self.n)
        return CPoly._trusted(self.n, {a: c * v for a, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, CPoly):
            self._same_n(other)
            out: dict[MultiIndex, complex] = {}
            for a, ca in self._terms.items():
                for b, cb in other._terms.items():
                    k = tuple(x + y for x, y in zip(a, b))
                    out[k] = out.get(k, 0j) + ca * cb
            return CPoly._trusted(self.n, out)
        return self.scale(other)

    __rmul__ = __mul__

    def derivative(self, j: int) -> CPoly:
        out: dict[MultiIndex, complex] = {}
        for a, c in self._terms.items():
            if a[j]:
                k = a[:j] + (a[j] - 1,) + a[j + 1:]
                out[k] = out.get(k, 0j) + a[j] * c
        return CPoly._trusted(self.n, out)

    def shifted(self, delta: Sequence[complex]) -> CPoly:
        """Return the polynomial ``x -> P(x + delta)``."""
        delta = [complex(d) for d in delta]
        if len(delta) != self.n:
            raise DimensionError("shift vector has wrong length")
        out: dict[MultiIndex, complex] = {}
        for a, c in self._terms.items():
            partial: dict[MultiIndex, complex] = {(): c}
            for j, aj in enumerate(a):
                nxt: dict[MultiIndex, complex] = {}
                for k in range(aj + 1):
                    w = comb(aj, k) * delta[j] ** (aj - k)
                    if w == 0:
                        continue
                    for head, ch in partial.items():
                        nxt[head + (k,)] = nxt.get(head + (k,), 0j) + ch * w
                partial = nxt
            for k, v in partial.items():
                out[k] = out.get(k, 0j) + v
        return CPoly._trusted(self.n, out)

    def conj(self) -> CPoly:
        return CPoly(self.n, {a: c.conjugate() for a, c in self._terms.items()}, prune=False)

    def __call__(self, x: Sequence[complex]) -> complex:
        x = np.asarray(x, dtype=complex)
        total = 0j
        for a, c in self._terms.items():
            total += c * np.prod(x ** np.asarray(a))
        return complex(total)

    def evaluate_many(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized evaluation at ``pts`` of shape ``(m, n)``."""
        pts = np.asarray(pts, dtype=complex)
        out = np.zeros(pts.shape[0], dtype=complex)
        for a, c in self._terms.items():
            out += c * np.prod(pts ** np.asarray(a), axis=1)
        return out

    def to_dense(self, shape: Sequence[int] | None = None) -> np.ndarray:
        """Coefficient tensor ``C[alpha] = coefficient of x^alpha``."""
        if shape is None:
            shape = [1 + max((a[j] for a in self._terms), default=0) for j in range(self.n)]
        arr = np.zeros(tuple(shape), dtype=complex)
        for a, c in self._terms.items():
            arr[a] += c
        return arr

    def __eq__(self, other) -> bool:
        return isinstance(other, CPoly) and self.n == other.n and self._terms == other._terms

    def __hash__(self):
        return hash((self.n, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return "CPoly(0)"
        parts = [f"{c:.6g}*x^{a}" for a, c in sorted(self._terms.items())]
        return "CPoly(" + " + ".join(parts) + ")"


def _prune(raw: dict[MultiIndex, complex]) -> dict[MultiIndex, complex]:
    if not raw:
        return {}
    top = max(abs(c) for c in raw.values())
    if top == 0:
        return {}
    cut = PRUNE_RTOL * top
    return {a: c for a, c in raw.items() if abs(c) > cut}


@dataclass(frozen=True, eq=False)
class GaussEnvelope:
    """``exp(-x^T M x - v^T x - s)`` for real ``x``; ``M`` complex symmetric."""

    M: np.ndarray
    v: np.ndarray
    s: complex = 0j

    def __post_init__(self):
        M = np.array(self.M, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError("M must be square")
        M = 0.5 * (M + M.T)
        v = np.array(self.v, dtype=complex).reshape(-1)
        if v.shape[0] != M.shape[0]:
            raise DimensionError("v and M have inconsistent sizes")
        lam = np.linalg.eigvalsh(M.real)
        if lam[0] <= PD_ATOL:
            raise IntegrabilityError(f"Re M is not positive definite (min eigenvalue {lam[0]:.3g})")
        M.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "s", complex(self.s))

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @classmethod
    def standard(cls, n: int, width: float = 0.5) -> GaussEnvelope:
        """``exp(-width * |x|^2)``; ``width=0.5`` is the oscillator ground state shape."""
        return cls(width * np.eye(n), np.zeros(n))

    def exponent(self, x: Sequence[complex]) -> complex:
        x = np.asarray(x, dtype=complex)
        return complex(-(x @ self.M @ x) - self.v @ x - self.s)

    def same_shape(self, other: GaussEnvelope) -> bool:
        """``(M, v)`` equal within the merge tolerance; ``s`` is ignored."""
        if self.n != other.n:
            return False
        for a, b in ((self.M, other.M), (self.v, other.v)):
            scale = 1.0 + max(np.max(np.abs(a)), np.max(np.abs(b)))
            if np.max(np.abs(a - b)) > MERGE_RTOL * scale:
                return False
        return True

    def with_linear(self, v: np.ndarray, s: complex) -> GaussEnvelope:
        return GaussEnvelope(self.M, v, s)

    def conj(self) -> GaussEnvelope:
        return GaussEnvelope(self.M.conj(), self.v.conj(), self.s.conjugate())

    def __mul__(self, other: GaussEnvelope) -> GaussEnvelope:
        return GaussEnvelope(self.M + other.M, self.v + other.v, self.s + other.s)

    def __repr__(self) -> str:
        return f"GaussEnvelope(M={self.M.tolist()}, v={self.v.tolist()}, s={self.s})"


@dataclass(frozen=True)
class PolyGaussTerm:
    poly: CPoly
    env: GaussEnvelope


class PolyGaussFun:
    """Finite sum of polynomial-times-Gaussian terms, kept in merged form.

    Terms whose envelopes share ``(M, v)`` are combined, the ``exp(-s)``
    offset of the later one being folded into its polynomial.  The zero
    function has no terms.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Iterable[PolyGaussTerm] = ()):
        self.n = int(n)
        merged: list[list] = []
        for t in terms:
            if t.poly.n != self.n or t.env.n != self.n:
                raise DimensionError(f"term in {t.env.n} variables added to function of {self.n}")
            if t.poly.is_zero():
                continue
            for slot in merged:
                env0 = slot[1]
                if env0.same_shape(t.env):
                    slot[0] = slot[0] + t.poly.scale(np.exp(env0.s - t.env.s))
                    break
            else:
                merged.append([t.poly, t.env])
        self.terms: tuple[PolyGaussTerm, ...] = tuple(
            PolyGaussTerm(p, e) for p, e in merged if not p.is_zero()
        )

    @classmethod
    def gaussian(cls, M, v, s: complex = 0j, poly: CPoly | None = None) -> PolyGaussFun:
        env = GaussEnvelope(M, v, s)
        return cls(env.n, [PolyGaussTerm(poly if poly is not None else CPoly.one(env.n), env)])

    @classmethod
    def zero(cls, n: int) -> PolyGaussFun:
        return cls(n)

    def is_zero(self) -> bool:
        return not self.terms

    def max_coeff(self) -> float:
        return max((t.poly.max_abs() * abs(np.exp(-t.env.s)) for t in self.terms), default=0.0)

    def degree(self) -> int:
        return max((t.poly.degree() for t in self.terms), default=-1)

    # operator sugar
    def __add__(self, other: PolyGaussFun) -> PolyGaussFun:
        return pg_add(self, other)

    def __sub__(self, other: PolyGaussFun) -> PolyGaussFun:
        return pg_add(self, other.scale(-1.0))

    def __neg__(self) -> PolyGaussFun:
        return self.scale(-1.0)

    def scale(self, c: complex) -> PolyGaussFun:
        return PolyGaussFun(self.n, [PolyGaussTerm(t.poly.scale(c), t.env) for t in self.terms])

    def __mul__(self, other):
        if isinstance(other, PolyGaussFun):
            return pg_multiply(self, other)
        if isinstance(other, CPoly):
            return pg_mul_poly(other, self)
        return self.scale(other)

    def __rmul__(self, other):
        if isinstance(other, CPoly):
            return pg_mul_poly(other, self)
        return self.scale(other)

    def __call__(self, x: Sequence[complex]) -> complex:
        return pg_eval(self, x)

    def __repr__(self) -> str:
        return f"PolyGaussFun(n={self.n}, terms={list(self.terms)!r})"


def _same_n(f: PolyGaussFun, g) -> None:
    if f.n != g.n:
        raise DimensionError(f"functions of {f.n} and {g.n} variables")


def pg_add(f: PolyGaussFun, g: PolyGaussFun) -> PolyGaussFun:
    _same_n(f, g)
    return PolyGaussFun(f.n, f.terms + g.terms)


def pg_mul_poly(p: CPoly, f: PolyGaussFun) -> PolyGaussFun:
    _same_n(f, p)
    return PolyGaussFun(f.n, [PolyGaussTerm(p * t.poly, t.env) for t in f.terms])


def pg_multiply(f: PolyGaussFun, g: PolyGaussFun) -> PolyGaussFun:
    """Pointwise product; envelopes multiply, so ``Re M`` stays positive definite."""
    _same_n(f, g)
    return PolyGaussFun(
        f.n, [PolyGaussTerm(s.poly * t.poly, s.env * t.env) for s in f.terms for t in g.terms]
    )


def pg_differentiate(f: PolyGaussFun, j: int) -> PolyGaussFun:
    """Exact partial derivative with respect to ``x_j`` (0-based)."""
    if not 0 <= j < f.n:
        raise IndexError(f"variable index {j} out of range for n={f.n}")
    out = []
    for t in f.terms:
        # d/dx_j of the exponent is -(2 M x + v)_j
        grad = CPoly(f.n, {unit_index(k, f.n): -2.0 * t.env.M[j, k] for k in range(f.n)})
        grad = grad + CPoly.constant(-t.env.v[j], f.n)
        out.append(PolyGaussTerm(t.poly.derivative(j) + t.poly * grad, t.env))
    return PolyGaussFun(f.n, out)


def pg_translate(f: PolyGaussFun, delta: Sequence[complex]) -> PolyGaussFun:
    """Return ``x -> f(x + delta)`` for a complex shift ``delta``."""
    d = np.asarray(delta, dtype=complex).reshape(-1)
    if d.shape[0] != f.n:
        raise DimensionError("shift vector has wrong length")
    if not np.any(d):
        return f
    out = []
    for t in f.terms:
        M, v, s = t.env.M, t.env.v, t.env.s
        env = GaussEnvelope(M, v + 2.0 * (M @ d), s + d @ M @ d + v @ d)
        out.append(PolyGaussTerm(t.poly.shifted(d), env))
    return PolyGaussFun(f.n, out)


def pg_mul_exp_linear(f: PolyGaussFun, u: Sequence[complex], c: complex = 0j) -> PolyGaussFun:
    """Multiply by ``exp(u^T x + c)``."""
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.shape[0] != f.n:
        raise DimensionError("u has wrong length")
    if not np.any(u) and c == 0:
        return f
    return PolyGaussFun(
        f.n,
        [PolyGaussTerm(t.poly, GaussEnvelope(t.env.M, t.env.v - u, t.env.s - c)) for t in f.terms],
    )


def pg_conjugate(f: PolyGaussFun) -> PolyGaussFun:
    """Complex conjugate of ``f`` as a function of real arguments."""
    return PolyGaussFun(f.n, [PolyGaussTerm(t.poly.conj(), t.env.conj()) for t in f.terms])


def pg_eval(f: PolyGaussFun, x: Sequence[complex]) -> complex:
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.shape[0] != f.n:
        raise DimensionError("evaluation point has wrong length")
    return complex(sum(t.poly(x) * np.exp(t.env.exponent(x)) for t in f.terms))


def pg_eval_many(f: PolyGaussFun, pts: np.ndarray) -> np.ndarray:
    """Evaluate at each row of ``pts`` (shape ``(m, n)``)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=complex))
    out = np.zeros(pts.shape[0], dtype=complex)
    for t in f.terms:
        M, v = t.env.M, t.env.v
        expo = -np.einsum("pi,ij,pj->p", pts, M, pts) - pts @ v - t.env.s
        out += t.poly.evaluate_many(pts) * np.exp(expo)
    return out


def max_coeff_deviation(f: PolyGaussFun, g: PolyGaussFun) -> float:
    """Largest coefficient (with ``exp(-s)`` folded in) of ``f - g``."""
    return (f - g).max_coeff()
