"""Time-and-band limiting Gram matrix.

``M[m, n]`` is the inner product of the orthonormal exceptional polynomials in
slots ``m`` and ``n`` over the truncated interval ``(lower, T]``, where
``lower`` is the left end of the support. Entries come from the adaptive
Gauss-Legendre quadrature in :mod:`xtimeband.quadrature`; the Hermite left tail
is cut off at a point where its contribution is provably tiny.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources

import numpy as np

from ._numeric import Backend, backend, normalize_precision
from .errors import DomainError
from .families import FamilySpec, Kind, orthonormal_table, weight_values
from .quadrature import integrate


@dataclass(frozen=True)
class GramMatrix:
    family: FamilySpec
    N: int
    T: object
    entries: np.ndarray
    precision_bits: int
    quad_tol: float
    error_estimate: float = 0.0

    @property
    def backend(self) -> Backend:
        return backend(None if self.precision_bits == 53 else self.precision_bits)

    def to_float(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    def scaled(self, c) -> "GramMatrix":
        out = np.array(self.entries * c)
        out.setflags(write=False)
        return GramMatrix(self.family, self.N, self.T, out, self.precision_bits,
                          self.quad_tol, self.error_estimate)


def default_quad_tol(be: Backend):
    if be.is_double:
        return 1e-14
    return be.const(2) ** (-int(0.8 * be.bits))


def check_time_limit(fam: FamilySpec, T) -> None:
    t = float(T)
    if not math.isfinite(t):
        raise DomainError(f"time limit T = {T!r} must be finite")
    if fam.kind is Kind.XJACOBI and not (-1 < t <= 1):
        raise DomainError(f"time limit T = {T} must lie in (-1, 1] for {fam.label()}")
    if fam.kind is Kind.XLAGUERRE and not t > 0:
        raise DomainError(f"time limit T = {T} must be positive for {fam.label()}")


def _integrand(fam: FamilySpec, N: int, be: Backend):
    def f(x):
        phi = orthonormal_table(fam, N, x, 0, be)[:, 0]     # (N, npts)
        w = weight_values(fam, x, be)
        pw = (phi * w).T
        return pw[:, :, None] * phi.T[:, None, :]
    return f


def _hermite_cutoff(f, N: int, T, be: Backend, tol):
    """Left end ``a`` with the discarded tail ``(-inf, a)`` below ``tol / 10``.

    Beyond the last real zero each integrand behaves like ``|x|^k e^{-x^2}``
    with ``k = 2*deg - 4``; for ``a^2 > k`` the tail is at most
    ``|f(a)| / (2|a| - k/|a|)`` and that bound is checked with a factor 10
    of slack for the lower-order terms.
    """
    fam = FamilySpec.xhermite()
    k = max(2 * fam.degree(N - 1) - 4, 0)
    a = min(-math.sqrt(2 * k + 8), float(T) - 1)
    while True:
        ab = be.const(a)
        peak = max(abs(v) for v in np.asarray(f(np.array([ab], dtype=be.dtype))).reshape(-1))
        bound = 10 * peak / (2 * abs(ab) - k / abs(ab))
        if bound <= tol / 10:
            return ab
        a -= 0.5


@lru_cache(maxsize=64)
def _gram_cached(fam: FamilySpec, N: int, T_key, bits, tol_key):
    be = backend(bits)
    T = be.param(T_key)
    tol = be.const(tol_key)
    f = _integrand(fam, N, be)
    if fam.kind is Kind.XHERMITE:
        lower = _hermite_cutoff(f, N, T, be, tol)
    else:
        lower = be.const(fam.support[0])
    panels = max(4, int(math.ceil(float(T - lower))))
    value, err, _ = integrate(f, lower, T, be, tol, initial_panels=panels)
    entries = be.zeros((N, N))
    for i in range(N):
        for j in range(i, N):
            entries[i, j] = entries[j, i] = value[i, j]
    entries.setflags(write=False)
    return entries, float(err)


def compute_gram(fam: FamilySpec, N: int, T, precision_bits=None, quad_tol=None) -> GramMatrix:
    """Gram matrix of the first ``N`` orthonormal polynomials over ``(lower, T]``.

    ``precision_bits=None`` means double precision. ``T`` may be a float, an
    int, a :class:`~fractions.Fraction` or a string such as ``"1/3"``.
    """
    if N < 1:
        raise DomainError(f"N = {N} must be at least 1")
    if isinstance(T, str):
        T = Fraction(T)
    check_time_limit(fam, T)
    bits = normalize_precision(precision_bits)
    be = backend(bits)
    tol = default_quad_tol(be) if quad_tol is None else quad_tol
    tol_key = float(tol) if be.is_double else str(tol)
    entries, err = _gram_cached(fam, N, T, bits, tol_key)
    return GramMatrix(fam, N, T, entries, be.precision_bits, float(tol), err)


# ---------------------------------------------------------------------------
# published closed form for the X-Hermite family, N = 7


@lru_cache(maxsize=None)
def load_fixtures() -> dict:
    text = resources.files("xtimeband.data").joinpath("reference_fixtures.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def _hermite_table_exprs():
    import sympy as sp

    table = load_fixtures()["hermite_gram_7"]
    T = sp.Symbol("T")
    exprs = {}
    for key, text in table["entries"].items():
        i, j = map(int, key.split(","))
        exprs[i, j] = exprs[j, i] = sp.sympify(text)
    return T, exprs


def hermite_closed_form_entry(m: int, n: int, T, precision=None):
    """Tabulated closed form of the 7x7 X-Hermite Gram matrix."""
    import sympy as sp

    if not (0 <= m <= 6 and 0 <= n <= 6):
        raise DomainError(f"closed-form table covers positions 0..6, got ({m}, {n})")
    be = backend(precision)
    sym, exprs = _hermite_table_exprs()
    t_exact = sp.Rational(str(Fraction(T))) if not isinstance(T, str) else sp.Rational(T)
    digits = be.precision_bits * 0.302 + 10
    poly = exprs[m, n].subs(sym, t_exact)
    p = be.const(str(sp.N(poly, int(digits))))
    t = be.param(Fraction(T) if isinstance(T, str) else T)
    value = -p * be.exp(-t * t) / (be.sqrt(be.pi) * (2 * t * t + 1))
    if m == n:
        value = value + (1 + be.erf(t)) / 2
    return value


@dataclass(frozen=True)
class TableComparison:
    """Entrywise comparison of a computed Gram matrix with the closed form."""

    max_discrepancy: float
    suspects: tuple          # ((m, n, discrepancy), ...) beyond the quarantine threshold

    def passed(self, tol: float) -> bool:
        return self.max_discrepancy <= tol


def compare_hermite_table(gram: GramMatrix, quarantine: float = 1e-8) -> TableComparison:
    """Compare ``gram`` (X-Hermite, N >= 7) with the closed-form table.

    Entries off by more than ``quarantine`` are reported as suspects and left
    out of ``max_discrepancy``.
    """
    be = gram.backend
    worst, suspects = 0.0, []
    for m in range(7):
        for n in range(m, 7):
            ref = hermite_closed_form_entry(m, n, gram.T, gram.precision_bits)
            d = float(abs(gram.entries[m, n] - ref))
            if d > quarantine:
                suspects.append((m, n, d))
            else:
                worst = max(worst, d)
    del be
    return TableComparison(worst, tuple(suspects))


def kernel(fam: FamilySpec, N: int, x, y, precision=None):
    """Reproducing kernel ``sum_j p_j(x) p_j(y)`` of the first ``N`` slots."""
    be = backend(precision)
    xs = np.atleast_1d(np.asarray(x, dtype=be.dtype))
    ys = np.atleast_1d(np.asarray(y, dtype=be.dtype))
    px = orthonormal_table(fam, N, xs, 0, be)[:, 0]
    py = orthonormal_table(fam, N, ys, 0, be)[:, 0]
    return (px * py).sum(axis=0)
