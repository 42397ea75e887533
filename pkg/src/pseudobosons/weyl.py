"""Normal-ordered differential operators and exponentials of linear ones.

A :class:`WeylOp` is a finite sum ``sum c * x^alpha d^beta`` with every
position factor to the left of every derivative.  Momentum enters only
through ``p_j = -i d_j`` at construction time, so the algebra below never
sees ``p``.

An :class:`ExpLinOp` is ``exp(u.x + w.d + c0)``.  Because ``[u.x, w.d]`` is
the scalar ``-u.w`` it factorizes exactly as multiplication by
``exp(u.x)``, translation by ``w`` and the scalar ``exp(c0 + u.w/2)``.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from math import comb, factorial
from typing import Mapping, Sequence

import numpy as np

from .errors import DegreeGuardError, DimensionError, ExpressionError
from .polygauss import (
    CPoly,
    MultiIndex,
    PolyGaussFun,
    pg_add,
    pg_differentiate,
    pg_mul_exp_linear,
    pg_mul_poly,
    pg_translate,
    unit_index,
)

DEGREE_GUARD = 16
#: coefficients below this relative size are treated as cancelled
WEYL_PRUNE_RTOL = 1e-15

Key = tuple[MultiIndex, MultiIndex]


def _falling(k: int, m: int) -> int:
    """``k (k-1) ... (k-m+1)``."""
    return factorial(k) // factorial(k - m) if m <= k else 0


class WeylOp:
    """Element of the Weyl algebra in normal order (positions left of derivatives)."""

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping[Key, complex] | None = None, prune: bool = True):
        self.n = int(n)
        raw: dict[Key, complex] = {}
        for (a, b), c in (terms or {}).items():
            a, b = tuple(int(i) for i in a), tuple(int(i) for i in b)
            if len(a) != self.n or len(b) != self.n:
                raise DimensionError(f"term {(a, b)} is not in {self.n} variables")
            raw[(a, b)] = raw.get((a, b), 0j) + complex(c)
        raw = {k: c for k, c in raw.items() if c != 0}
        if prune and raw:
            cut = WEYL_PRUNE_RTOL * max(abs(c) for c in raw.values())
            raw = {k: c for k, c in raw.items() if abs(c) > cut}
        self._terms = raw
        if self.degree() > DEGREE_GUARD:
            raise DegreeGuardError(f"operator degree {self.degree()} exceeds guard {DEGREE_GUARD}")

    # elementary operators
    @classmethod
    def identity(cls, n: int) -> WeylOp:
        return cls.scalar(1.0, n)

    @classmethod
    def scalar(cls, c: complex, n: int) -> WeylOp:
        z = (0,) * n
        return cls(n, {(z, z): c})

    @classmethod
    def x(cls, j: int, n: int) -> WeylOp:
        return cls(n, {(unit_index(j, n), (0,) * n): 1.0})

    @classmethod
    def d(cls, j: int, n: int) -> WeylOp:
        return cls(n, {((0,) * n, unit_index(j, n)): 1.0})

    @classmethod
    def p(cls, j: int, n: int) -> WeylOp:
        """Momentum ``-i d/dx_j``."""
        return cls.d(j, n) * (-1j)

    @property
    def terms(self) -> dict[Key, complex]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(a) + sum(b) for a, b in self._terms), default=-1)

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def coeff(self, xpow: Sequence[int], dpow: Sequence[int]) -> complex:
        return self._terms.get((tuple(xpow), tuple(dpow)), 0j)

    def _same_n(self, other: WeylOp) -> None:
        if self.n != other.n:
            raise DimensionError(f"operators on {self.n} and {other.n} variables")

    def __add__(self, other):
        if not isinstance(other, WeylOp):
            other = WeylOp.scalar(other, self.n)
        self._same_n(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0j) + c
        return WeylOp(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> WeylOp:
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other if isinstance(other, WeylOp) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: complex) -> WeylOp:
        c = complex(c)
        return WeylOp(self.n, {k: c * v for k, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, WeylOp):
            return w_compose(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, c):
        return self.scale(1.0 / complex(c))

    def __matmul__(self, f: PolyGaussFun) -> PolyGaussFun:
        return w_apply(self, f)

    def __pow__(self, k: int) -> WeylOp:
        out = WeylOp.identity(self.n)
        for _ in range(int(k)):
            out = out * self
        return out

    @property
    def dag(self) -> WeylOp:
        return w_adjoint(self)

    def __eq__(self, other) -> bool:
        return isinstance(other, WeylOp) and self.n == other.n and self._terms == other._terms

    def __hash__(self):
        return hash((self.n, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return "WeylOp(0)"
        parts = []
        for (a, b), c in sorted(self._terms.items()):
            mono = "".join(f"x{j + 1}^{e}" for j, e in enumerate(a) if e)
            mono += "".join(f"d{j + 1}^{e}" for j, e in enumerate(b) if e)
            parts.append(f"({c:.6g}){mono}")
        return "WeylOp(" + " + ".join(parts) + ")"


def max_coeff_deviation(A: WeylOp, B: WeylOp) -> float:
    """Largest absolute coefficient of ``A - B`` (without pruning)."""
    A._same_n(B)
    keys = set(A._terms) | set(B._terms)
    return max((abs(A._terms.get(k, 0j) - B._terms.get(k, 0j)) for k in keys), default=0.0)


def _commute_d_past_x(b: int, g: int) -> list[tuple[int, int, int]]:
    """``d^b x^g = sum_k C(b,k) g!/(g-k)! x^(g-k) d^(b-k)`` as ``(weight, xpow, dpow)``."""
    return [(comb(b, k) * _falling(g, k), g - k, b - k) for k in range(min(b, g) + 1)]


def w_compose(A: WeylOp, B: WeylOp) -> WeylOp:
    """Normal-ordered product ``A B`` (``B`` acts first)."""
    A._same_n(B)
    n = A.n
    out: dict[Key, complex] = {}
    for (a1, b1), c1 in A._terms.items():
        for (a2, b2), c2 in B._terms.items():
            # per variable: x^a1 (d^b1 x^a2) d^b2; different variables commute
            partial: list[tuple[complex, tuple, tuple]] = [(c1 * c2, (), ())]
            for j in range(n):
                moves = _commute_d_past_x(b1[j], a2[j])
                partial = [
                    (c * wt, xs + (a1[j] + g,), ds + (bb + b2[j],))
                    for c, xs, ds in partial
                    for wt, g, bb in moves
                ]
            for c, xs, ds in partial:
                out[(xs, ds)] = out.get((xs, ds), 0j) + c
    return WeylOp(n, out)


def w_commutator(A: WeylOp, B: WeylOp) -> WeylOp:
    return w_compose(A, B) - w_compose(B, A)


def w_adjoint(A: WeylOp) -> WeylOp:
    """Formal L^2 adjoint: ``(c x^a d^b)^dagger = conj(c) (-1)^|b| d^b x^a``."""
    n = A.n
    z = (0,) * n
    out = WeylOp(n)
    for (a, b), c in A._terms.items():
        left = WeylOp(n, {(z, b): c.conjugate() * (-1) ** sum(b)})
        right = WeylOp(n, {(a, z): 1.0})
        out = out + w_compose(left, right)
    return out


def w_apply(A: WeylOp, f: PolyGaussFun) -> PolyGaussFun:
    """Apply ``A`` to ``f``: derivatives first, then multiply by the position monomial."""
    if A.n != f.n:
        raise DimensionError(f"operator on {A.n} variables applied to function of {f.n}")
    n = A.n
    by_d: dict[MultiIndex, dict[MultiIndex, complex]] = {}
    for (a, b), c in A._terms.items():
        by_d.setdefault(b, {})[a] = c
    cache: dict[MultiIndex, PolyGaussFun] = {(0,) * n: f}

    def deriv(b: MultiIndex) -> PolyGaussFun:
        if b in cache:
            return cache[b]
        j = next(k for k, e in enumerate(b) if e)
        lower = b[:j] + (b[j] - 1,) + b[j + 1:]
        cache[b] = pg_differentiate(deriv(lower), j)
        return cache[b]

    out = PolyGaussFun.zero(n)
    for b, xs in sorted(by_d.items()):
        out = pg_add(out, pg_mul_poly(CPoly(n, xs), deriv(b)))
    return out


# --- expression parsing ---------------------------------------------------

_SYMBOL = re.compile(r"^([xpd])(\d+)$")


def w_from_xp(expr: str, n: int = 2, constants: Mapping[str, complex] | None = None) -> WeylOp:
    """Build a normal-ordered operator from an expression in ``x1.., p1.., d1..``.

    Products are operator products in the written order, so ``"p1*x1"``
    becomes ``-i x1 d1 - i``.  Numbers (including ``1j``), the imaginary
    unit ``i`` and names from ``constants`` act as scalars; ``**`` takes
    non-negative integer powers.
    """
    constants = {"i": 1j, **(constants or {})}
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {expr!r}: {exc.msg}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) and not isinstance(node.value, bool):
            return complex(node.value)
        if isinstance(node, ast.Name):
            m = _SYMBOL.match(node.id)
            if m:
                j = int(m.group(2)) - 1
                if not 0 <= j < n:
                    raise ExpressionError(f"variable {node.id} out of range for n={n}")
                return {"x": WeylOp.x, "p": WeylOp.p, "d": WeylOp.d}[m.group(1)](j, n)
            if node.id in constants:
                return complex(constants[node.id])
            raise ExpressionError(f"unknown symbol {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = ev(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp):
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                if isinstance(right, WeylOp):
                    raise ExpressionError("division by an operator")
                return left / right
            if isinstance(node.op, ast.Pow):
                if isinstance(right, WeylOp) or right.imag or right.real != int(right.real) or right.real < 0:
                    raise ExpressionError("exponent must be a non-negative integer")
                k = int(right.real)
                return left**k if isinstance(left, WeylOp) else left**k
        raise ExpressionError(f"unsupported syntax in {expr!r}: {ast.dump(node)[:60]}")

    val = ev(tree)
    return val if isinstance(val, WeylOp) else WeylOp.scalar(val, n)


# --- exponentials of linear operators ----------------------------------------


@dataclass(frozen=True, eq=False)
class ExpLinOp:
    """``exp(u.x + w.d + c0)``."""

    u: np.ndarray
    w: np.ndarray
    c0: complex = 0j

    def __post_init__(self):
        u = np.array(self.u, dtype=complex).reshape(-1)
        w = np.array(self.w, dtype=complex).reshape(-1)
        if u.shape != w.shape:
            raise DimensionError("u and w must have the same length")
        u.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "c0", complex(self.c0))

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @classmethod
    def identity(cls, n: int) -> ExpLinOp:
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def from_generator(cls, L: WeylOp) -> ExpLinOp:
        """``exp(L)`` for ``L`` of degree at most one."""
        if L.degree() > 1:
            raise ValueError("generator must be linear in x and d")
        n = L.n
        z = (0,) * n
        u = [L.coeff(unit_index(j, n), z) for j in range(n)]
        w = [L.coeff(z, unit_index(j, n)) for j in range(n)]
        return cls(u, w, L.coeff(z, z))

    def generator(self) -> WeylOp:
        n = self.n
        z = (0,) * n
        terms = {(z, z): self.c0}
        for j in range(n):
            terms[(unit_index(j, n), z)] = self.u[j]
            terms[(z, unit_index(j, n))] = self.w[j]
        return WeylOp(n, terms)

    def power(self, k: float) -> ExpLinOp:
        """``exp(k L)``; ``k = 2`` squares, ``k = -2`` gives the inverse square."""
        return ExpLinOp(k * self.u, k * self.w, k * self.c0)

    def rescaled(self, factor: float) -> ExpLinOp:
        """Same operator multiplied by the positive scalar ``factor``."""
        return ExpLinOp(self.u, self.w, self.c0 + np.log(factor))

    def is_formally_self_adjoint(self, atol: float = 1e-12) -> bool:
        """``u`` real, ``w`` imaginary (real momentum coefficients) and ``c0`` real."""
        return bool(
            np.all(np.abs(self.u.imag) <= atol)
            and np.all(np.abs(self.w.real) <= atol)
            and abs(self.c0.imag) <= atol
        )

    def __matmul__(self, f: PolyGaussFun) -> PolyGaussFun:
        return explin_apply(self, f)

    def __repr__(self) -> str:
        return f"ExpLinOp(u={self.u.tolist()}, w={self.w.tolist()}, c0={self.c0})"


def explin_apply(T: ExpLinOp, f: PolyGaussFun) -> PolyGaussFun:
    """``T f (x) = exp(u.x + c0 + u.w/2) f(x + w)``."""
    if T.n != f.n:
        raise DimensionError(f"operator on {T.n} variables applied to function of {f.n}")
    shifted = pg_translate(f, T.w)
    return pg_mul_exp_linear(shifted, T.u, T.c0 + 0.5 * (T.u @ T.w))


def explin_inverse(T: ExpLinOp) -> ExpLinOp:
    return T.power(-1)


def _binomial_poly(k: int, shift: complex) -> dict[int, complex]:
    """Coefficients of ``(y + shift)^k`` keyed by the power of ``y``."""
    return {m: comb(k, m) * shift ** (k - m) for m in range(k + 1)}


def explin_conjugate_weyl(T: ExpLinOp, A: WeylOp) -> WeylOp:
    """``T A T^{-1}`` via ``x_j -> x_j + w_j`` and ``d_j -> d_j - u_j``.

    The adjoint action of a linear exponent stops after one commutator, and
    the substituted monomials ``(x + w)^a (d - u)^b`` stay normal ordered.
    """
    if T.n != A.n:
        raise DimensionError("operator sizes differ")
    n = A.n
    out: dict[Key, complex] = {}
    for (a, b), c in A.items():
        partial: list[tuple[complex, tuple, tuple]] = [(c, (), ())]
        for j in range(n):
            xs = _binomial_poly(a[j], T.w[j])
            ds = _binomial_poly(b[j], -T.u[j])
            partial = [
                (cc * cx * cd, pa + (mx,), pb + (md,))
                for cc, pa, pb in partial
                for mx, cx in xs.items()
                for md, cd in ds.items()
                if cx != 0 and cd != 0
            ]
        for cc, pa, pb in partial:
            out[(pa, pb)] = out.get((pa, pb), 0j) + cc
    return WeylOp(n, out)


def explin_series_apply(T: ExpLinOp, f: PolyGaussFun, order: int) -> PolyGaussFun:
    """Truncated ``sum_{k<=order} L^k f / k!`` with ``L`` the generator."""
    L = T.generator()
    term = f
    total = f
    for k in range(1, order + 1):
        term = w_apply(L, term).scale(1.0 / k)
        total = pg_add(total, term)
    return total
