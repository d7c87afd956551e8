"""Narrow-banded matrices commuting with the Gram matrix.

The commutant of ``M`` restricted to symmetric matrices of half-bandwidth
``w`` is the nullspace of ``X -> XM - MX``. It always contains the identity;
for the families handled here it has exactly one more direction, which is
fixed by ``L[N-1, N-1] = 0`` and a chosen value of ``L[N-1, N-2]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ._numeric import Backend, backend, normalize_precision
from .bispectral import (BandedSymmetric, EigDiagonal, ResidualReport, apply_T_jacobi, build_eig_diagonal,
                         build_jacobi_K, multiply_theta)
from .errors import (DomainError, NormalizationDegenerate, NullspaceDimensionMismatch, RankDeficientBasis,
                     SizeMismatch)
from .families import FamilySpec, eval_exceptional, norm_squared
from .jets import Jet
from .timeband import GramMatrix

DEFAULT_BANDWIDTH = {"xhermite": 3, "xjacobi": 2, "xlaguerre": 2}


@dataclass(frozen=True)
class CommutantResult:
    L: BandedSymmetric
    commutator_residual: float
    nullspace_dim: int
    singular_values: tuple      # descending, relative to the largest
    precision_bits: int

    @property
    def gap(self) -> float:
        """Smallest singular value outside the nullspace (relative)."""
        k = len(self.singular_values) - self.nullspace_dim
        return self.singular_values[k - 1] if k > 0 else 0.0


def nullspace_threshold(be: Backend, entry_error, scale) -> float:
    """Relative singular-value cut-off for the commutant nullspace.

    The commutator of the exact commutant with the computed ``M`` is of the
    order of ``M``'s entry error, measured against the spread of ``M``
    around its mean diagonal; the cut-off sits three decades above that.
    """
    n_err = float(entry_error) + float(be.eps)
    return min(1e3 * n_err / float(scale), 0.5)


def _band_pairs(N: int, w: int):
    return [(i, i + d) for d in range(min(w, N - 1) + 1) for i in range(N - d)]


def _constraint_matrix(A, pairs, be: Backend):
    """Rows ``(p, q), p < q`` of ``XA - AX`` for each band generator ``X``."""
    N = A.shape[0]
    rows = [(p, q) for p in range(N) for q in range(p + 1, N)]
    index = {rq: r for r, rq in enumerate(rows)}
    C = be.zeros((max(len(rows), len(pairs)), len(pairs)))   # zero-padded to at least square
    for col, (i, j) in enumerate(pairs):
        # X = E_ij + E_ji (single E_ii on the diagonal)
        X = be.zeros((N, N))
        X[i, j] = X[j, i] = be.const(1)
        D = X @ A - A @ X
        for (p, q), r in index.items():
            C[r, col] = D[p, q]
    return C


def _svd(C, be: Backend):
    """Singular values (descending) and right singular vectors as rows."""
    if be.is_double:
        _, s, vt = np.linalg.svd(C)
        return list(s), vt
    ctx = be.ctx
    _, s, V = ctx.svd_r(be.matrix(C), full_matrices=True, compute_uv=True)
    sv = [s[k] for k in range(len(s))]
    order = sorted(range(len(sv)), key=lambda k: -sv[k])
    Vn = be.from_matrix(V)
    return [sv[k] for k in order], Vn[order]


def _as_array(M, precision):
    if isinstance(M, GramMatrix):
        return np.asarray(M.entries), backend(None if M.precision_bits == 53 else M.precision_bits)
    A = np.asarray(M)
    if precision is None and A.dtype == object:
        first = A.reshape(-1)[0]
        precision = first.context.prec if hasattr(first, "context") else None
    be = backend(normalize_precision(precision))
    if be.is_double:
        return np.asarray(A, dtype=float), be
    return be.array(A), be


def _fnorm(A, be: Backend):
    return be.sqrt(sum(v * v for v in A.reshape(-1)))


def solve_banded_commutant(M, half_bandwidth: int, *, precision=None, zero_diagonal=None,
                           unit_entry=None, unit_value=1, threshold=None) -> CommutantResult:
    """Symmetric ``L`` of half-bandwidth ``half_bandwidth`` with ``LM = ML``.

    ``M`` is a :class:`GramMatrix` or a square array. The commutant is fixed
    up to ``L -> s L + t I``; by default ``L[N-1, N-1] = 0`` and
    ``L[N-1, N-2] = 1``. ``zero_diagonal=k`` (0-based) moves the zero to
    ``L[k, k]`` and ``unit_entry=(i, j)`` with ``unit_value`` sets the scale
    through another band entry instead. Raises
    :class:`NullspaceDimensionMismatch` unless the relative nullspace
    (singular values ``<= threshold`` relative to the largest) has dimension
    exactly 2; the default threshold follows from the accuracy of ``M``.
    """
    A, be = _as_array(M, precision)
    quad_tol = M.quad_tol if isinstance(M, GramMatrix) else 0.0
    N = A.shape[0]
    if A.shape != (N, N):
        raise SizeMismatch(f"expected a square matrix, got shape {A.shape}")
    if N < 2:
        raise DomainError("the normalization needs N >= 2")
    if half_bandwidth < 1:
        raise DomainError("half_bandwidth must be >= 1")
    if any(abs(A[i, j] - A[j, i]) > 0 for i in range(N) for j in range(i)):
        A = (A + A.T) / 2
    # the shift removes the part of M that commutes with everything
    shift = sum(A[i, i] for i in range(N)) / N
    S = A - shift * be.eye(N) if not be.is_double else A - shift * np.eye(N)
    scale = max(abs(v) for v in S.reshape(-1))
    if scale == 0:
        raise NullspaceDimensionMismatch(len(_band_pairs(N, half_bandwidth)), (),
                                         "M is a multiple of the identity; every matrix commutes with it")
    S = S / scale

    pairs = _band_pairs(N, half_bandwidth)
    C = _constraint_matrix(S, pairs, be)
    sv, V = _svd(C, be)
    smax = sv[0]
    rel = [float(s / smax) for s in sv]
    mag = max(abs(v) for v in A.reshape(-1))
    thr = nullspace_threshold(be, quad_tol + N * be.eps * mag, scale) if threshold is None else threshold
    dim = sum(1 for r in rel if r <= thr)
    if dim != 2:
        raise NullspaceDimensionMismatch(dim, tuple(rel))

    k = N - 1 if zero_diagonal is None else zero_diagonal
    ui, uj = sorted((N - 1, N - 2) if unit_entry is None else unit_entry)
    if not (0 <= k < N) or (ui, uj) not in pairs or (ui, uj) == (k, k):
        raise DomainError(f"cannot normalize with L[{k}, {k}] = 0 and L[{ui}, {uj}] fixed "
                          f"at half-bandwidth {half_bandwidth}")
    basis = V[-2:]
    kk, uu = pairs.index((k, k)), pairs.index((ui, uj))
    a11, a12 = basis[0][kk], basis[1][kk]
    a21, a22 = basis[0][uu], basis[1][uu]
    det = a11 * a22 - a12 * a21
    # the null vectors are accurate to about (noise level) / (gap to the third singular value)
    third = rel[-3] if len(rel) > 2 else 1.0
    det_tol = min(max(100 * float(be.eps), thr / third), 1e-3)
    if abs(det) <= det_tol * be.sqrt(a11 * a11 + a12 * a12) * be.sqrt(a21 * a21 + a22 * a22):
        raise NormalizationDegenerate(f"the commutant has L[{ui}, {uj}] = 0 once L[{k}, {k}] = 0")
    s_val = be.param(unit_value)
    c1 = -a12 * s_val / det
    c2 = a11 * s_val / det
    vec = c1 * basis[0] + c2 * basis[1]

    Ld = be.zeros((N, N))
    for (i, j), v in zip(pairs, vec):
        Ld[i, j] = Ld[j, i] = v
    Ld[k, k] = 0 * Ld[0, 0]
    Ld[ui, uj] = Ld[uj, ui] = s_val
    comm = Ld @ A - A @ Ld
    resid = float(_fnorm(comm, be) / (_fnorm(Ld, be) * _fnorm(A, be)))
    return CommutantResult(BandedSymmetric.from_dense(Ld, half_bandwidth), resid, dim, tuple(rel),
                           be.precision_bits)


# ---------------------------------------------------------------------------
# Perline-type combinations of B and Lambda

_TERM = re.compile(r"([+-]?)([^+-]+)")
_FACTOR = re.compile(r"(Λ|B|I)(\d*)")

JACOBI_PERLINE_BASIS = ("I", "Λ", "B", "Λ2", "ΛB+BΛ", "BΛ2+Λ2B", "ΛBΛ", "Λ3B+BΛ3-ΛBΛ2-Λ2BΛ")


def parse_word(word: str):
    """``"Λ3B+BΛ3-ΛBΛ2"`` -> ``[(1, [("Λ", 3), ("B", 1)]), ...]``."""
    terms = []
    text = word.replace(" ", "").replace("²", "2").replace("³", "3")
    for sign, body in _TERM.findall(text):
        factors = []
        pos = 0
        for m in _FACTOR.finditer(body):
            if m.start() != pos:
                raise ValueError(f"cannot parse monomial {word!r}")
            factors.append((m.group(1), int(m.group(2) or 1)))
            pos = m.end()
        if pos != len(body) or not factors:
            raise ValueError(f"cannot parse monomial {word!r}")
        terms.append((-1 if sign == "-" else 1, factors))
    return terms


def evaluate_word(word: str, B, lam, be: Backend):
    N = B.shape[0]
    eye = be.eye(N) if not be.is_double else np.eye(N)
    total = None
    for sign, factors in parse_word(word):
        prod = eye
        for letter, power in factors:
            if letter == "I":
                continue
            base = B if letter == "B" else lam
            for _ in range(power):
                prod = prod @ base
        total = sign * prod if total is None else total + sign * prod
    return total


@dataclass(frozen=True)
class PerlineFit:
    basis: tuple
    gamma: tuple
    fit_residual: float      # max entry error relative to max |L|
    rank: int

    def reconstruct(self, B, lam, precision=None):
        be = backend(precision)
        return sum(g * evaluate_word(w, B, lam, be) for g, w in zip(self.gamma, self.basis))


def _dense(x):
    if isinstance(x, (BandedSymmetric, EigDiagonal)):
        return x.to_dense()
    return np.asarray(x)


def fit_perline_combination(L, B, lam, basis=JACOBI_PERLINE_BASIS, *, precision=None,
                            rank_tol=None) -> PerlineFit:
    """Least-squares fit ``L ~ sum gamma_k word_k(B, Lambda)``.

    Raises :class:`RankDeficientBasis` if the evaluated words are linearly
    dependent at this size.
    """
    Ld, Bd, Dd = _dense(L), _dense(B), _dense(lam)
    if not (Ld.shape == Bd.shape == Dd.shape) or Ld.shape[0] != Ld.shape[1]:
        raise SizeMismatch(f"shapes {Ld.shape}, {Bd.shape}, {Dd.shape} do not match")
    if precision is None and Ld.dtype == object:
        precision = Ld.reshape(-1)[0].context.prec
    be = backend(normalize_precision(precision))
    if be.is_double:
        Ld, Bd, Dd = (np.asarray(m, dtype=float) for m in (Ld, Bd, Dd))
    else:
        Ld, Bd, Dd = (be.array(m) for m in (Ld, Bd, Dd))
    N = Ld.shape[0]
    cols = [evaluate_word(w, Bd, Dd, be) for w in basis]
    iu = [(i, j) for i in range(N) for j in range(i, N)]
    A = be.zeros((len(iu), len(cols)))
    rhs = be.zeros(len(iu))
    for r, (i, j) in enumerate(iu):
        rhs[r] = Ld[i, j]
        for c, W in enumerate(cols):
            A[r, c] = W[i, j]
    # column scaling keeps the rank test meaningful when words differ in size
    norms = [max(abs(v) for v in A[:, c]) or 1 for c in range(len(cols))]
    As = A / np.array(norms, dtype=be.dtype)
    if be.is_double:
        s = np.linalg.svd(As, compute_uv=False)
        tol = 1e-10 if rank_tol is None else rank_tol
    else:
        s = list(be.ctx.svd_r(be.matrix(As), compute_uv=False))
        tol = be.const(2) ** (-(be.bits // 2)) if rank_tol is None else rank_tol
    rank = sum(1 for v in s if v > tol * s[0])
    if rank < len(cols):
        raise RankDeficientBasis(rank, len(cols))
    if be.is_double:
        y, *_ = np.linalg.lstsq(As, rhs, rcond=None)
    else:
        U, sv, Vt = be.ctx.svd_r(be.matrix(As), full_matrices=False, compute_uv=True)
        Ua, Va = be.from_matrix(U), be.from_matrix(Vt)
        coef = [sum(Ua[r, c] * rhs[r] for r in range(len(rhs))) / sv[c] for c in range(len(cols))]
        y = [sum(Va[c, k] * coef[c] for c in range(len(cols))) for k in range(len(cols))]
    gamma = [y[c] / norms[c] for c in range(len(cols))]
    recon = sum(g * W for g, W in zip(gamma, cols))
    scale = max(abs(v) for v in Ld.reshape(-1))
    err = max(abs(v) for v in (recon - Ld).reshape(-1))
    return PerlineFit(tuple(basis), tuple(gamma), float(err / scale), rank)


def jacobi_perline_operands(N: int, alpha, beta, precision=None):
    """``(B_N, Lambda_N)`` for the X1-Jacobi fit: symmetrized five-term matrix and eigenvalues."""
    _, _, Kt = build_jacobi_K(N, alpha, beta, precision)
    lam = build_eig_diagonal(FamilySpec.xjacobi(alpha, beta), N, precision)
    return Kt, lam


# ---------------------------------------------------------------------------
# differential commutant of the Jacobi kernel

def dk_coefficients(N: int, *, literal: bool = False):
    """Coefficients ``(c_sym, c_theta, c_sq, c_mid)`` of the differential operator

    ``c_sym (T Θ + Θ T) + c_theta Θ + c_sq (T² Θ + Θ T²) + c_mid T Θ T``.

    ``literal=True`` gives the published first coefficient ``-(6N²+4N-19)``,
    which does not balance the kernel identity; the default is the value that
    does, ``-(6N²+42N-19)/4``.
    """
    from fractions import Fraction
    c_sym = -Fraction(6 * N * N + 4 * N - 19) if literal else -Fraction(6 * N * N + 42 * N - 19, 4)
    c_theta = Fraction(3, 2) * (N**4 + 14 * N**3 + 43 * N**2 - 42 * N + 14)
    return c_sym, c_theta, Fraction(1, 4), Fraction(1)


def _apply_dk(alpha, beta, b, f: Jet, coeffs, be: Backend):
    c_sym, c_theta, c_sq, c_mid = (be.param(c) for c in coeffs)

    def T(g):
        return apply_T_jacobi(alpha, beta, g, be.bits)

    def Th(g):
        return multiply_theta(g, b, be.bits)

    t_th = T(Th(f))                      # order k-2
    th_t = Th(T(f))
    t2_th = T(T(Th(f)))                  # order k-4
    th_t2 = Th(T(T(f)))
    t_th_t = T(Th(T(f)))
    th_f = Th(f)
    return (c_sym * (t_th.value + th_t.value) + c_theta * th_f.value
            + c_sq * (t2_th.value + th_t2.value) + c_mid * t_th_t.value)


def check_jacobi_differential_commutant(N: int, points, alpha=3, beta=4, *, precision=None,
                                        literal: bool = False) -> ResidualReport:
    """Check ``D_x K_N(x, y) = D_y K_N(x, y)`` at sample points ``(x, y)``.

    ``K_N(x, y) = sum_{n=1..N} p_n(x) p_n(y) / ||p_n||^2``. Only the published
    parameters ``alpha=3, beta=4`` carry coefficients. Each residual is
    ``|D_x K - D_y K| / max(|D_x K|, 1)``.
    """
    if (alpha, beta) != (3, 4):
        raise DomainError("the differential commutant is only available for alpha=3, beta=4")
    be = backend(precision)
    fam = FamilySpec.xjacobi(alpha, beta)
    b = fam.derived.b
    coeffs = dk_coefficients(N, literal=literal)
    out = []
    for x, y in points:
        xs, ys = be.param(x), be.param(y)
        dx = dy = 0
        for n in range(1, N + 1):
            px = eval_exceptional(fam, n, xs, 4, be.bits)
            py = eval_exceptional(fam, n, ys, 4, be.bits)
            nrm = norm_squared(fam, n, be.bits)
            dx = dx + _apply_dk(alpha, beta, b, px, coeffs, be) * py.value / nrm
            dy = dy + px.value * _apply_dk(alpha, beta, b, py, coeffs, be) / nrm
        out.append(float(abs(dx - dy) / max(abs(dx), 1)))
    return ResidualReport(max(out), tuple(out))
