"""Classical and exceptional (X-Hermite, X1-Jacobi, X1-Laguerre) polynomials.

All evaluators run three-term recurrences pointwise (never monomial
expansions) and carry derivatives through the recurrence, so jets of any
order come out of one sweep:

    p_{n+1}^{(j)} = (A_n x + B_n) p_n^{(j)} + j A_n p_n^{(j-1)} - C_n p_{n-1}^{(j)}

Exceptional polynomials are then formed from the classical jets:

* X-Hermite (missing degrees 1, 2) from the 3x3 Wronskian-type determinant
  with ``H_1, H_2``, which expands to ``16 H_n - 16 x H_n' + (8x^2 + 4) H_n''``;
* X1-Jacobi (missing degree 0) as ``(b p_{n-1} - p_{n-2})/(2n+a+b-2) - (x-b) p_{n-1}/2``;
* X1-Laguerre (missing degree 0) as ``-(x+alpha+1) L_{n-1} + L_{n-2}``.

Every public function takes ``precision`` in bits; ``None`` means doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from numbers import Real

import numpy as np

from ._numeric import Backend, backend
from .errors import DomainError, MissingDegree
from .jets import Jet
from .quadrature import integrate


class Kind(str, Enum):
    XHERMITE = "xhermite"
    XJACOBI = "xjacobi"
    XLAGUERRE = "xlaguerre"


def _exact(value):
    """Fraction for rational-looking inputs, float otherwise."""
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float) and value.is_integer():
        return Fraction(int(value))
    return value


@dataclass(frozen=True)
class JacobiDerived:
    """The constants ``a = (beta-alpha)/2``, ``b = (beta+alpha)/(beta-alpha)``, ``c = b + 1/a``.

    ``c`` is the root of the degree-1 polynomial; only ``c = b + 1/a`` makes
    that polynomial an eigenfunction (with eigenvalue 0) of the operator.
    """

    a: Real
    b: Real
    c: Real

    @classmethod
    def from_params(cls, alpha, beta) -> "JacobiDerived":
        alpha, beta = _exact(alpha), _exact(beta)
        if alpha == beta:
            raise DomainError("X1-Jacobi needs alpha != beta")
        a = (beta - alpha) / 2
        b = (beta + alpha) / (beta - alpha)
        c = b + 1 / a
        if not abs(b) > 1:
            raise DomainError(
                f"b = {float(b):.6g} lies in [-1, 1]; the weight would have a pole inside the "
                "interval (alpha and beta must have the same sign)")
        return cls(a, b, c)


@dataclass(frozen=True)
class FamilySpec:
    """Which exceptional family, with its classical parameters."""

    kind: Kind
    alpha: Real | None = None
    beta: Real | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.XHERMITE:
            if self.alpha is not None or self.beta is not None:
                raise DomainError("X-Hermite takes no parameters")
        elif self.kind is Kind.XJACOBI:
            if self.alpha is None or self.beta is None:
                raise DomainError("X1-Jacobi needs alpha and beta")
            if not (self.alpha > -1 and self.beta > -1):
                raise DomainError(f"X1-Jacobi needs alpha, beta > -1 (got {self.alpha}, {self.beta})")
            JacobiDerived.from_params(self.alpha, self.beta)
        else:
            if self.alpha is None:
                raise DomainError("X1-Laguerre needs alpha")
            if self.beta is not None:
                raise DomainError("X1-Laguerre takes no beta")
            if not self.alpha > 0:
                raise DomainError(f"X1-Laguerre needs alpha > 0 (got {self.alpha})")

    @classmethod
    def xhermite(cls) -> "FamilySpec":
        return cls(Kind.XHERMITE)

    @classmethod
    def xjacobi(cls, alpha, beta) -> "FamilySpec":
        return cls(Kind.XJACOBI, alpha, beta)

    @classmethod
    def xlaguerre(cls, alpha) -> "FamilySpec":
        return cls(Kind.XLAGUERRE, alpha)

    @property
    def derived(self) -> JacobiDerived:
        if self.kind is not Kind.XJACOBI:
            raise DomainError("derived constants exist only for X1-Jacobi")
        return JacobiDerived.from_params(self.alpha, self.beta)

    @property
    def support(self) -> tuple[float, float]:
        return {
            Kind.XHERMITE: (-math.inf, math.inf),
            Kind.XJACOBI: (-1.0, 1.0),
            Kind.XLAGUERRE: (0.0, math.inf),
        }[self.kind]

    @property
    def missing_degrees(self) -> tuple[int, ...]:
        return (1, 2) if self.kind is Kind.XHERMITE else (0,)

    def degree(self, position: int) -> int:
        """Degree of the polynomial in slot ``position`` of the orthonormal sequence."""
        if position < 0:
            raise DomainError(f"position must be >= 0, got {position}")
        if self.kind is Kind.XHERMITE:
            return 0 if position == 0 else position + 2
        return position + 1

    def position(self, degree: int) -> int:
        self.check_degree(degree)
        if self.kind is Kind.XHERMITE:
            return 0 if degree == 0 else degree - 2
        return degree - 1

    def degrees(self, count: int) -> list[int]:
        return [self.degree(p) for p in range(count)]

    def check_degree(self, n: int) -> None:
        if n < 0 or n in self.missing_degrees:
            raise MissingDegree(f"degree {n} is not in the {self.kind.value} family "
                                f"(missing degrees {self.missing_degrees})")

    def label(self) -> str:
        if self.kind is Kind.XHERMITE:
            return "xhermite"
        if self.kind is Kind.XJACOBI:
            return f"xjacobi(alpha={self.alpha}, beta={self.beta})"
        return f"xlaguerre(alpha={self.alpha})"


# --------------------------------------------------------------------------
# classical recurrences


def _points(x, be: Backend):
    arr = np.asarray(x, dtype=object if not be.is_double else float)
    if be.is_double:
        return arr
    out = np.empty(arr.shape, dtype=object)
    flat_in, flat_out = arr.reshape(-1), out.reshape(-1)
    for i, v in enumerate(flat_in):
        flat_out[i] = be.ctx.mpf(v)
    return out


def _recurrence(kind: str, n: int, be: Backend, alpha=None, beta=None):
    """Coefficients ``(A_n, B_n, C_n)`` of ``p_{n+1} = (A_n x + B_n) p_n - C_n p_{n-1}``."""
    if kind == "hermite":
        return be.const(2), be.const(0), be.const(2 * n)
    if kind == "laguerre":
        return (be.const(-1) / (n + 1), (2 * n + 1 + alpha) / (n + 1), (n + alpha) / (n + 1))
    # Jacobi, standard normalisation, written via the a_n, b_n, c_n of
    # x p_n = c_n p_{n-1} + b_n p_n + a_n p_{n+1}.
    s = alpha + beta
    if n == 0:
        return (s + 2) / 2, (alpha - beta) / 2, be.const(0)
    an = 2 * (n + 1) * (n + s + 1) / ((2 * n + s + 1) * (2 * n + s + 2))
    bn = (beta * beta - alpha * alpha) / ((2 * n + s) * (2 * n + s + 2))
    cn = 2 * (n + alpha) * (n + beta) / ((2 * n + s) * (2 * n + s + 1))
    return 1 / an, -bn / an, cn / an


def jacobi_three_term(n: int, alpha, beta, precision=None):
    """``(a_n, b_n, c_n)`` with ``x p_n = c_n p_{n-1} + b_n p_n + a_n p_{n+1}``."""
    be = backend(precision)
    alpha, beta = be.param(alpha), be.param(beta)
    s = alpha + beta
    an = 2 * (n + 1) * (n + s + 1) / ((2 * n + s + 1) * (2 * n + s + 2))
    bn = (beta * beta - alpha * alpha) / ((2 * n + s) * (2 * n + s + 2))
    cn = 2 * (n + alpha) * (n + beta) / ((2 * n + s) * (2 * n + s + 1))
    return an, bn, cn


def classical_table(kind: str, nmax: int, x, order: int, be: Backend, alpha=None, beta=None) -> np.ndarray:
    """Jets of ``p_0 .. p_nmax``: array of shape ``(nmax+1, order+1, *x.shape)``."""
    x = _points(x, be)
    table = np.empty((nmax + 1, order + 1) + x.shape, dtype=be.dtype)
    one = be.const(1)
    zero = be.const(0)
    table[0, 0] = x * 0 + one
    table[0, 1:] = x * 0 + zero
    for n in range(nmax):
        A, B, C = _recurrence(kind, n, be, alpha, beta)
        lin = A * x + B
        prev = table[n - 1] if n > 0 else None
        for j in range(order + 1):
            val = lin * table[n, j]
            if j > 0:
                val = val + (j * A) * table[n, j - 1]
            if prev is not None:
                val = val - C * prev[j]
            table[n + 1, j] = val
    return table


def _classical_jet(kind, n, x, k, precision, alpha=None, beta=None) -> Jet:
    if n < 0 or k < 0:
        raise DomainError(f"degree and jet order must be >= 0 (got n={n}, k={k})")
    be = backend(precision)
    if alpha is not None:
        alpha = be.param(alpha)
    if beta is not None:
        beta = be.param(beta)
    xp = _points(x, be)
    table = classical_table(kind, n, xp, k, be, alpha, beta)
    return Jet(xp[()] if xp.ndim == 0 else xp, table[n])


def eval_hermite_classical(n: int, x, k: int = 0, precision=None) -> Jet:
    """Physicists' Hermite ``H_n`` and its first ``k`` derivatives at ``x``."""
    return _classical_jet("hermite", n, x, k, precision)


def eval_jacobi_classical(n: int, alpha, beta, x, k: int = 0, precision=None) -> Jet:
    """Standard-normalisation Jacobi ``P_n^(alpha,beta)`` with derivatives."""
    if not (alpha > -1 and beta > -1):
        raise DomainError(f"Jacobi needs alpha, beta > -1 (got {alpha}, {beta})")
    return _classical_jet("jacobi", n, x, k, precision, alpha, beta)


def eval_laguerre_classical(n: int, alpha, x, k: int = 0, precision=None) -> Jet:
    """Generalised Laguerre ``L_n^(alpha)`` with derivatives."""
    if not alpha > -1:
        raise DomainError(f"Laguerre needs alpha > -1 (got {alpha})")
    return _classical_jet("laguerre", n, x, k, precision, alpha)


# --------------------------------------------------------------------------
# exceptional polynomials


def exceptional_table(fam: FamilySpec, degrees, x, order: int, be: Backend) -> np.ndarray:
    """Jets of the exceptional polynomials of the given degrees.

    Returns shape ``(len(degrees), order+1, *x.shape)``.
    """
    degrees = list(degrees)
    for n in degrees:
        fam.check_degree(n)
    x = _points(x, be)
    out = np.empty((len(degrees), order + 1) + x.shape, dtype=be.dtype)
    if not degrees:
        return out
    nmax = max(degrees)

    if fam.kind is Kind.XHERMITE:
        H = classical_table("hermite", nmax, x, order + 2, be)
        x2 = 8 * x * x + 4
        for row, n in enumerate(degrees):
            scale = be.const(1) / (8 * (n - 1) * (n - 2))
            for j in range(order + 1):
                val = (16 - 16 * j + 8 * j * (j - 1)) * H[n, j] + (16 * j - 16) * x * H[n, j + 1] + x2 * H[n, j + 2]
                out[row, j] = val * scale
        return out

    alpha = be.param(fam.alpha)
    if fam.kind is Kind.XJACOBI:
        beta = be.param(fam.beta)
        b = be.param(fam.derived.b)
        P = classical_table("jacobi", max(nmax - 1, 0), x, order, be, alpha, beta)
        for row, n in enumerate(degrees):
            den = 2 * n + alpha + beta - 2
            p1 = P[n - 1]
            for j in range(order + 1):
                p2 = P[n - 2, j] if n >= 2 else 0
                val = (b * p1[j] - p2) / den - (x - b) * p1[j] / 2
                if j > 0:
                    val = val - j * p1[j - 1] / 2
                out[row, j] = val
        return out

    Lg = classical_table("laguerre", max(nmax - 1, 0), x, order, be, alpha)
    for row, n in enumerate(degrees):
        l1 = Lg[n - 1]
        for j in range(order + 1):
            val = -(x + alpha + 1) * l1[j]
            if j > 0:
                val = val - j * l1[j - 1]
            if n >= 2:
                val = val + Lg[n - 2, j]
            out[row, j] = val
    return out


def eval_exceptional(fam: FamilySpec, n: int, x, k: int = 0, precision=None) -> Jet:
    """Exceptional polynomial of degree ``n`` with ``k`` derivatives at ``x``."""
    fam.check_degree(n)
    be = backend(precision)
    xp = _points(x, be)
    table = exceptional_table(fam, [n], xp, k, be)
    return Jet(xp[()] if xp.ndim == 0 else xp, table[0])


# --------------------------------------------------------------------------
# weights and norms


def _check_support(fam: FamilySpec, x, be: Backend):
    lo, hi = fam.support
    vals = np.asarray(x).reshape(-1)
    for v in vals:
        if not (lo < v < hi):
            raise DomainError(f"x = {float(v):.17g} is outside the support ({lo}, {hi}) of {fam.label()}")


def weight_values(fam: FamilySpec, x, be: Backend):
    """Weight at backend points, without the support check."""
    if fam.kind is Kind.XHERMITE:
        return be.exp(-x * x) / (1 + 2 * x * x) ** 2
    alpha = be.param(fam.alpha)
    if fam.kind is Kind.XLAGUERRE:
        return be.exp(-x) * _pow(x, alpha, be) / (x + alpha) ** 2
    beta = be.param(fam.beta)
    b = be.param(fam.derived.b)
    return _pow(1 - x, alpha, be) * _pow(1 + x, beta, be) / (x - b) ** 2


def _pow(base, exponent, be: Backend):
    if isinstance(exponent, int) or (not be.is_double and be.ctx.isint(exponent)) or \
            (be.is_double and float(exponent).is_integer()):
        return base ** int(exponent)
    return be.power(base, exponent)


def weight(fam: FamilySpec, x, precision=None):
    """Orthogonality weight of ``fam`` at ``x`` (scalar or array)."""
    be = backend(precision)
    xp = _points(x, be)
    _check_support(fam, xp, be)
    w = weight_values(fam, xp, be)
    return w[()] if isinstance(w, np.ndarray) and w.ndim == 0 else w


def default_norm_tol(be: Backend):
    """Relative tolerance for quadrature-computed norms."""
    return 1e-13 if be.is_double else be.const(2) ** (-(be.bits - 12))


@lru_cache(maxsize=None)
def _jacobi_norms(alpha, beta, nmax: int, bits):
    be = backend(bits)
    fam = FamilySpec.xjacobi(alpha, beta)
    degrees = list(range(1, nmax + 1))

    def integrand(x):
        vals = exceptional_table(fam, degrees, x, 0, be)[:, 0]
        return (vals * vals * weight_values(fam, x, be)).T

    value, _, _ = integrate(integrand, -1, 1, be, default_norm_tol(be), relative=True, initial_panels=8)
    return tuple(value)


def norm_squared(fam: FamilySpec, n: int, precision=None):
    """Squared weighted L2 norm of the exceptional polynomial of degree ``n``."""
    fam.check_degree(n)
    be = backend(precision)
    if fam.kind is Kind.XHERMITE:
        if n == 0:
            return be.sqrt(be.pi) / 2
        return be.sqrt(be.pi) * be.const(2) ** n * be.factorial(n) / ((n - 1) * (n - 2))
    if fam.kind is Kind.XLAGUERRE:
        alpha = be.param(fam.alpha)
        return (alpha + n) * be.gamma(n + alpha) / ((alpha + n - 1) * be.factorial(n - 1))
    # cached in blocks of 16 degrees
    nmax = 16 * ((n + 15) // 16)
    return _jacobi_norms(fam.alpha, fam.beta, nmax, be.bits)[n - 1]


def orthonormal_table(fam: FamilySpec, count: int, x, order: int, be: Backend) -> np.ndarray:
    """Jets of the first ``count`` orthonormal polynomials, shape ``(count, order+1, *x.shape)``."""
    degrees = fam.degrees(count)
    table = exceptional_table(fam, degrees, x, order, be)
    for row, n in enumerate(degrees):
        table[row] = table[row] / be.sqrt(norm_squared(fam, n, be.bits))
    return table


def eval_orthonormal(fam: FamilySpec, position: int, x, k: int = 0, precision=None) -> Jet:
    """Orthonormal polynomial in slot ``position`` (degrees mapped per family)."""
    be = backend(precision)
    n = fam.degree(position)
    xp = _points(x, be)
    table = exceptional_table(fam, [n], xp, k, be)[0] / be.sqrt(norm_squared(fam, n, be.bits))
    return Jet(xp[()] if xp.ndim == 0 else xp, table)
