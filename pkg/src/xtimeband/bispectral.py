"""Bispectral operators of the exceptional families.

Difference side: the heptadiagonal matrix ``B`` with ``B Psi(x) = Theta(x) Psi(x)``
for X-Hermite (``Theta = 4x^3/3 + 2x``) and the pentadiagonal ``K`` with
``K Psi(x) = (x-b)^2 Psi(x)`` for X1-Jacobi, symmetrised as ``D K D^-1``.

Differential side: the eigenvalue diagonals and the second-order operators,
applied pointwise to jets.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import jets as tj
from ._numeric import Backend, backend
from .errors import DomainError, PoleAtB, SizeMismatch, SymmetrizationFailure, Unsupported
from .families import FamilySpec, JacobiDerived, Kind, eval_orthonormal, orthonormal_table
from .jets import Jet


@dataclass(frozen=True)
class BandedSymmetric:
    """Symmetric matrix stored by upper diagonals.

    ``bands[d, i]`` holds entry ``(i, i + d)`` for ``d = 0 .. half_bandwidth``;
    slots past the end of a diagonal are zero.
    """

    size: int
    half_bandwidth: int
    bands: np.ndarray

    def __post_init__(self):
        if self.size < 1 or self.half_bandwidth < 0:
            raise ValueError("size must be >= 1 and half_bandwidth >= 0")
        if self.bands.shape != (self.half_bandwidth + 1, self.size):
            raise ValueError(f"bands must have shape {(self.half_bandwidth + 1, self.size)}")

    @classmethod
    def from_dense(cls, A, half_bandwidth: int, *, tol=None) -> "BandedSymmetric":
        """Read the upper band of ``A``; with ``tol`` also check symmetry and zero fill."""
        A = np.asarray(A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise SizeMismatch(f"expected a square matrix, got shape {A.shape}")
        w = min(half_bandwidth, n - 1)
        bands = np.zeros((half_bandwidth + 1, n), dtype=A.dtype)
        if A.dtype == object:
            bands.fill(A[0, 0] * 0)
        for d in range(w + 1):
            for i in range(n - d):
                bands[d, i] = A[i, i + d]
        if tol is not None:
            scale = max(max(abs(v) for v in A.reshape(-1)), 1e-300)
            for i in range(n):
                for j in range(n):
                    if abs(j - i) > half_bandwidth and abs(A[i, j]) > tol * scale:
                        raise ValueError(f"entry ({i}, {j}) lies outside the band")
                    if abs(A[i, j] - A[j, i]) > tol * scale:
                        raise ValueError(f"matrix is not symmetric at ({i}, {j})")
        return cls(n, half_bandwidth, bands)

    def entry(self, i: int, j: int):
        if not (0 <= i < self.size and 0 <= j < self.size):
            raise IndexError((i, j))
        i, j = min(i, j), max(i, j)
        d = j - i
        if d > self.half_bandwidth:
            return self.bands[0, 0] * 0
        return self.bands[d, i]

    def to_dense(self) -> np.ndarray:
        n = self.size
        A = np.zeros((n, n), dtype=self.bands.dtype)
        if self.bands.dtype == object:
            A.fill(self.bands[0, 0] * 0)
        for d in range(min(self.half_bandwidth, n - 1) + 1):
            for i in range(n - d):
                A[i, i + d] = self.bands[d, i]
                A[i + d, i] = self.bands[d, i]
        return A

    def astype_float(self) -> "BandedSymmetric":
        return BandedSymmetric(self.size, self.half_bandwidth, np.vectorize(float, otypes=[float])(self.bands))


@dataclass(frozen=True)
class EigDiagonal:
    """Eigenvalues of the differential operator, one per basis position."""

    values: np.ndarray

    @property
    def size(self) -> int:
        return len(self.values)

    def to_dense(self) -> np.ndarray:
        n = self.size
        A = np.zeros((n, n), dtype=self.values.dtype)
        if self.values.dtype == object:
            A.fill(self.values[0] * 0)
        for i in range(n):
            A[i, i] = self.values[i]
        return A


@dataclass(frozen=True)
class SymmetrizerD:
    """Positive diagonal ``mu_1 .. mu_N`` with ``mu_1 = 1``."""

    values: np.ndarray


# --------------------------------------------------------------------------
# X-Hermite


def hermite_alpha_sq(n: int) -> Fraction:
    """Square of the coupling between degrees ``n`` and ``n + 3``."""
    return Fraction(2, 9) * (n + 3) * (n - 1) * (n - 2)


def hermite_beta_sq(n: int) -> Fraction:
    """Square of the coupling between degrees ``n`` and ``n + 1``.

    Carries a factor 2 relative to the often-quoted ``(n+1) n (n-2)``; without
    it ``B Psi = Theta Psi`` fails already on the row of degree 3.
    """
    return Fraction(2 * (n + 1) * n * (n - 2))


def _sqrt_nonneg(value: Fraction, be: Backend):
    if value < 0:
        raise ArithmeticError(f"negative squared coupling {value}")
    return be.sqrt(be.const(value))


def build_hermite_B(N: int, precision=None) -> BandedSymmetric:
    """Truncation ``B_N`` of the X-Hermite recurrence matrix (positions = degrees 0, 3, 4, ...)."""
    if N < 1:
        raise DomainError("N must be >= 1")
    be = backend(precision)
    degrees = FamilySpec.xhermite().degrees(N)
    bands = be.zeros((4, N))
    for i, n in enumerate(degrees):
        for j in range(i + 1, min(i + 4, N)):
            m = degrees[j]
            if m - n == 1:
                bands[j - i, i] = _sqrt_nonneg(hermite_beta_sq(n), be)
            elif m - n == 3:
                bands[j - i, i] = _sqrt_nonneg(hermite_alpha_sq(n), be)
    return BandedSymmetric(N, 3, bands)


def hermite_theta(x):
    return 4 * x**3 / 3 + 2 * x


# --------------------------------------------------------------------------
# X1-Jacobi


def jacobi_K_entries(n: int, alpha, beta):
    """``(e, d, c, b, a)`` coefficients of row ``n`` of the five-term recurrence.

    Terms carrying a vanishing factor such as ``(n-1)`` are skipped so that
    a zero denominator in the same term never gets evaluated.
    """
    s = alpha + beta
    diff = beta - alpha
    a_hat = 4 * n * (n + 1) * (n + s) * (n + s + 1) / (
        (2 * n + s - 1) * (2 * n + s) * (2 * n + s + 1) * (2 * n + s + 2))
    b_hat = -16 * n * s * (n + alpha) * (n + beta) * (n + s) / (
        diff * (2 * n + s - 2) * (2 * n + s - 1) * (2 * n + s) * (2 * n + s + 2))
    c_hat = (-2 * n * (n + 1) * (n + beta - 1) * (n + beta + 2) / (2 * n + s + 1)
             + 4 * n * n * (n + beta - 1) * (n + beta + 1) / (2 * n + s)
             + 4 * beta * beta / (diff * diff) - 4 * beta / diff)
    if n != 1:
        c_hat = c_hat - 4 * (n - 1) ** 2 * (n + beta - 2) * (n + beta) / (2 * n + s - 2)
    if n not in (1, 2):
        c_hat = c_hat + 2 * (n - 2) * (n - 1) * (n + beta - 3) * (n + beta) / (2 * n + s - 3)
    d_hat = e_hat = None
    if n >= 2:
        d_hat = -16 * s * (n + alpha - 2) * (n + alpha) * (n + beta - 2) * (n + beta) / (
            diff * (2 * n + s - 4) * (2 * n + s - 2) * (2 * n + s - 1) * (2 * n + s))
    if n >= 3:
        e_hat = 4 * (n + alpha - 3) * (n + alpha) * (n + beta - 3) * (n + beta) / (
            (2 * n + s - 4) * (2 * n + s - 3) * (2 * n + s - 2) * (2 * n + s - 1))
    return e_hat, d_hat, c_hat, b_hat, a_hat


def symmetrizer_ratio(n: int, alpha, beta):
    """``(mu_{n+1} / mu_n)^2``."""
    s = alpha + beta
    return (n * (n + alpha) * (n + beta) * (n + s) * (2 * n + s + 1)) / (
        (n + alpha - 1) * (n + alpha + 1) * (n + beta - 1) * (n + beta + 1) * (2 * n + s - 1))


def _sym_tol(be: Backend):
    return 1e-12 if be.is_double else be.const(2) ** (-(be.bits - 24))


def build_jacobi_K(N: int, alpha, beta, precision=None, *, mu1=1):
    """Raw ``K`` (dense, rows = degrees 1..N), the symmetrizer ``D`` and ``D K D^-1``.

    Raises :class:`SymmetrizationFailure` if ``D K D^-1`` is not symmetric.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    FamilySpec.xjacobi(alpha, beta)  # validates
    be = backend(precision)
    al, bt = be.param(alpha), be.param(beta)
    K = be.zeros((N, N))
    for r in range(N):
        n = r + 1
        entries = jacobi_K_entries(n, al, bt)
        for offset, value in zip(range(-2, 3), entries):
            col = r + offset
            if value is None or not (0 <= col < N):
                continue
            K[r, col] = value
    mu = be.zeros(N)
    mu[0] = be.param(mu1)
    for r in range(1, N):
        mu[r] = mu[r - 1] * be.sqrt(symmetrizer_ratio(r, al, bt))
    Kt = be.zeros((N, N))
    for i in range(N):
        for j in range(N):
            Kt[i, j] = mu[i] * K[i, j] / mu[j]
    scale = max(abs(v) for v in Kt.reshape(-1))
    defect = max(abs(Kt[i, j] - Kt[j, i]) for i in range(N) for j in range(N))
    if defect > _sym_tol(be) * scale:
        raise SymmetrizationFailure(f"D K D^-1 asymmetric: max defect {float(defect):.3g} vs scale {float(scale):.3g}")
    # mirror the upper triangle so the result is exactly symmetric
    for i in range(N):
        for j in range(i):
            Kt[i, j] = Kt[j, i]
    return K, SymmetrizerD(mu / mu[0]), BandedSymmetric.from_dense(Kt, 2)


def jacobi_theta(x, b):
    return (x - b) ** 2


# --------------------------------------------------------------------------
# eigenvalue diagonals


def build_eig_diagonal(fam: FamilySpec, N: int, precision=None) -> EigDiagonal:
    """``Lambda_N``: ``-2n`` for X-Hermite, ``(n-1)(n+alpha+beta)`` for X1-Jacobi."""
    be = backend(precision)
    degrees = fam.degrees(N)
    if fam.kind is Kind.XHERMITE:
        return EigDiagonal(be.array([-2 * n for n in degrees]))
    if fam.kind is Kind.XJACOBI:
        s = be.param(fam.alpha) + be.param(fam.beta)
        return EigDiagonal(np.array([(n - 1) * (n + s) for n in degrees], dtype=be.dtype))
    raise Unsupported("no eigenvalue diagonal is known for the X1-Laguerre family")


# --------------------------------------------------------------------------
# differential operators on jets


def _jet_backend(f: Jet, precision):
    if precision is not None:
        return backend(precision)
    first = np.asarray(f.coeffs).reshape(-1)[0]
    if hasattr(first, "context"):
        return backend(first.context.prec)
    return backend(None)


def _require_order(f: Jet, drop: int):
    if f.order < drop:
        raise ValueError(f"jet of order {f.order} is too short for a order-{drop} operator")


def apply_T_jacobi(alpha, beta, f: Jet, precision=None, *, pole_tol=1e-8) -> Jet:
    """``T f = (x^2-1) f'' + 2a (1-bx)/(b-x) ((x-c) f' - f)``; the jet order drops by 2."""
    _require_order(f, 2)
    be = _jet_backend(f, precision)
    der = JacobiDerived.from_params(alpha, beta)
    a, b, c = be.param(der.a), be.param(der.b), be.param(der.c)
    x0 = f.point
    if np.any(np.abs(be.to_float(np.asarray(x0 - b))) < pole_tol):
        raise PoleAtB(f"x = {x0} is within {pole_tol} of the pole b = {float(b)}")
    k = f.order - 2
    t = f.taylor()
    f2 = tj.deriv(tj.deriv(t))
    f1 = tj.deriv(t)[: k + 1]
    f0 = t[: k + 1]
    one = be.const(1)
    quad = tj.poly([-one, 0 * one, one], x0, k, one)
    rat = tj.mul(tj.poly([one, -b], x0, k, one), tj.recip_linear(b, x0, k))
    inner = tj.mul(tj.poly([-c, one], x0, k, one), f1) - f0
    out = tj.mul(quad, f2) + (2 * a) * tj.mul(rat, inner)
    return Jet.from_taylor(x0, out)


def apply_L_hermite(f: Jet, precision=None) -> Jet:
    """``f'' - (2x + 8x/(1+2x^2)) f'``; the jet order drops by 2."""
    _require_order(f, 2)
    be = _jet_backend(f, precision)
    x0 = f.point
    k = f.order - 2
    t = f.taylor()
    one = be.const(1)
    coeff = tj.poly([0 * one, 2 * one], x0, k, one) + tj.mul(
        tj.poly([0 * one, 8 * one], x0, k, one), tj.recip(tj.poly([one, 0 * one, 2 * one], x0, k, one)))
    out = tj.deriv(tj.deriv(t)) - tj.mul(coeff, tj.deriv(t)[: k + 1])
    return Jet.from_taylor(x0, out)


def multiply_theta(f: Jet, b, precision=None) -> Jet:
    """Multiply a jet by ``(x - b)^2`` (order preserved)."""
    be = _jet_backend(f, precision)
    one = be.const(1)
    b = be.param(b)
    theta = tj.poly([b * b, -2 * b, one], f.point, f.order, one)
    return Jet.from_taylor(f.point, tj.mul(theta, f.taylor()))


# --------------------------------------------------------------------------
# identity checks


@dataclass(frozen=True)
class ResidualReport:
    """Largest scaled residual of an identity, with the per-row maxima."""

    max_residual: float
    row_residuals: tuple

    def passed(self, tol: float) -> bool:
        return self.max_residual <= tol


def _rel(num, den):
    return float(num) / max(float(den), 1e-300)


def check_recurrence_hermite(N: int, xs, precision=None) -> ResidualReport:
    """Check ``(B Psi(x))_row = Theta(x) Psi_row(x)`` for rows ``0 .. N-1``.

    ``Psi`` is evaluated three slots beyond ``N`` so every tested row sees
    all its couplings.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    be = backend(precision)
    fam = FamilySpec.xhermite()
    ext = N + 3
    B = build_hermite_B(ext, precision).to_dense()
    xs = be.array(list(xs))
    psi = orthonormal_table(fam, ext, xs, 0, be)[:, 0]  # (ext, npts)
    theta = hermite_theta(xs)
    rows = []
    for r in range(N):
        worst = 0.0
        for k in range(len(xs)):
            lhs = sum(B[r, j] * psi[j, k] for j in range(ext))
            rhs = theta[k] * psi[r, k]
            scale = max(sum(abs(B[r, j] * psi[j, k]) for j in range(ext)), abs(rhs), 1)
            worst = max(worst, _rel(abs(lhs - rhs), scale))
        rows.append(worst)
    return ResidualReport(max(rows), tuple(rows))


def check_jacobi_K_relation(N: int, alpha, beta, xs, precision=None, rows=None) -> ResidualReport:
    """Check ``(K~ Psi~(x))_row = (x-b)^2 Psi~_row(x)`` on orthonormal polynomials.

    By default rows ``0 .. N-1`` (degrees 1..N) are tested against a matrix two
    sizes larger, so truncation never cuts a coupling.
    """
    be = backend(precision)
    fam = FamilySpec.xjacobi(alpha, beta)
    ext = N + 2
    _, _, Kt = build_jacobi_K(ext, alpha, beta, precision)
    Kd = Kt.to_dense()
    b = be.param(fam.derived.b)
    xs = be.array(list(xs))
    psi = orthonormal_table(fam, ext, xs, 0, be)[:, 0]
    theta = jacobi_theta(xs, b)
    rows = range(N) if rows is None else rows
    out = []
    for r in rows:
        worst = 0.0
        for k in range(len(xs)):
            lhs = sum(Kd[r, j] * psi[j, k] for j in range(ext))
            rhs = theta[k] * psi[r, k]
            scale = max(sum(abs(Kd[r, j] * psi[j, k]) for j in range(ext)), abs(rhs), 1)
            worst = max(worst, _rel(abs(lhs - rhs), scale))
        out.append(worst)
    return ResidualReport(max(out), tuple(out))


def check_T_jacobi_eigen(alpha, beta, nmax: int, xs, precision=None) -> ResidualReport:
    """Check ``T p_n = (n-1)(n+alpha+beta) p_n`` for degrees ``1 .. nmax``."""
    be = backend(precision)
    fam = FamilySpec.xjacobi(alpha, beta)
    s = be.param(alpha) + be.param(beta)
    out = []
    for n in range(1, nmax + 1):
        worst = 0.0
        for x in xs:
            f = eval_orthonormal(fam, n - 1, x, 2, precision)
            tf = apply_T_jacobi(alpha, beta, f, precision)
            lam = (n - 1) * (n + s)
            scale = max(abs(lam * f.value), max(abs(c) for c in f.coeffs), 1)
            worst = max(worst, _rel(abs(tf.value - lam * f.value), scale))
        out.append(worst)
    return ResidualReport(max(out), tuple(out))


@dataclass(frozen=True)
class CombinaResult:
    holds: bool
    defect: Fraction
    entries_checked: int


def _hermite_q(li: int, lj: int) -> Fraction:
    """Scalar factor of the combination at band entry ``(i, j)``; entry = ``B_ij * q``."""
    return (Fraction(-18, 5) + (li * li + lj * lj) - 2 * li * lj
            - Fraction(1, 40) * (li**4 + lj**4) + Fraction(1, 10) * (li**3 * lj + li * lj**3)
            - Fraction(3, 20) * li * li * lj * lj)


def check_combina_identity(N: int) -> CombinaResult:
    """Exact check that the degree-4 combination of ``B_N`` and ``Lambda_N`` vanishes.

    Every entry of the combination is ``B_ij * q(lambda_i, lambda_j)`` because
    ``Lambda`` is diagonal; ``q`` is checked in rational arithmetic on every
    structurally non-zero ``B_ij``.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    degrees = FamilySpec.xhermite().degrees(N)
    lam = [-2 * n for n in degrees]
    defect = Fraction(0)
    checked = 0
    for i in range(N):
        for j in range(i + 1, min(i + 4, N)):
            gap = degrees[j] - degrees[i]
            coupling = hermite_beta_sq(degrees[i]) if gap == 1 else (
                hermite_alpha_sq(degrees[i]) if gap == 3 else Fraction(0))
            if coupling == 0:
                continue
            checked += 1
            defect = max(defect, abs(_hermite_q(lam[i], lam[j])))
    return CombinaResult(defect == 0, defect, checked)
