"""Symmetric eigendecompositions and the diagnostics that compare two of them."""

from __future__ import annotations

import statistics
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._numeric import Backend, backend, normalize_precision
from .bispectral import BandedSymmetric
from .errors import NonSymmetricInput, SizeMismatch
from .timeband import GramMatrix

SIGN_CONVENTION = "largest-magnitude entry positive"


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray      # ascending
    eigenvectors: np.ndarray     # orthonormal columns
    precision_bits: int
    sign_convention: str = SIGN_CONVENTION

    @property
    def backend(self) -> Backend:
        return backend(None if self.precision_bits == 53 else self.precision_bits)

    def to_float(self) -> "SpectralDecomposition":
        return SpectralDecomposition(np.array(self.eigenvalues, dtype=float),
                                     np.array(self.eigenvectors, dtype=float), 53, self.sign_convention)


def _matrix_and_backend(A, precision):
    if isinstance(A, GramMatrix):
        precision = A.precision_bits if precision is None else precision
        A = A.entries
    elif isinstance(A, BandedSymmetric):
        A = A.to_dense()
    A = np.asarray(A)
    if precision is None and A.dtype == object:
        first = A.reshape(-1)[0]
        precision = first.context.prec if hasattr(first, "context") else None
    be = backend(normalize_precision(precision))
    return (np.asarray(A, dtype=float) if be.is_double else be.array(A)), be


def _fix_signs(V):
    for c in range(V.shape[1]):
        col = V[:, c]
        k = max(range(len(col)), key=lambda i: abs(col[i]))
        if col[k] < 0:
            V[:, c] = -col
    return V


def eigh(A, precision=None) -> SpectralDecomposition:
    """Eigenvalues (ascending) and sign-normalized eigenvectors of symmetric ``A``.

    Doubles use LAPACK's tridiagonal reduction with implicit QR; big floats
    use mpmath's Householder tridiagonalization and implicit QL, at the
    precision of ``A`` (or ``precision``).
    """
    A, be = _matrix_and_backend(A, precision)
    n = A.shape[0]
    if A.shape != (n, n):
        raise SizeMismatch(f"expected a square matrix, got shape {A.shape}")
    scale = max((abs(v) for v in A.reshape(-1)), default=0)
    tol = (1e-12 if be.is_double else be.eps * 2**10) * scale
    for i in range(n):
        for j in range(i):
            if abs(A[i, j] - A[j, i]) > tol:
                raise NonSymmetricInput(f"entries ({i}, {j}) and ({j}, {i}) differ by {float(abs(A[i, j] - A[j, i])):.3g}")
    if be.is_double:
        w, V = np.linalg.eigh((A + A.T) / 2)
    else:
        E, Q = be.ctx.eigsy(be.matrix((A + A.T) / 2))
        w = np.array([E[k] for k in range(n)], dtype=object)
        V = be.from_matrix(Q)
        order = sorted(range(n), key=lambda k: w[k])
        w, V = w[order], V[:, order]
    V = _fix_signs(np.array(V))
    w.setflags(write=False)
    V.setflags(write=False)
    return SpectralDecomposition(w, V, be.precision_bits)


@dataclass(frozen=True)
class CrossGram:
    matrix: np.ndarray           # Y_L^T X_M
    permutation_score: float     # max | |C| - P | for the best permutation P
    column_max: np.ndarray
    permutation: np.ndarray      # row matched to each column


def cross_gram(L_decomp: SpectralDecomposition, M_decomp: SpectralDecomposition) -> CrossGram:
    """``Y_L^T X_M`` in double precision, with its distance from a signed permutation."""
    Y = np.array(L_decomp.eigenvectors, dtype=float)
    X = np.array(M_decomp.eigenvectors, dtype=float)
    if Y.shape != X.shape:
        raise SizeMismatch(f"eigenvector frames of shapes {Y.shape} and {X.shape}")
    C = Y.T @ X
    absC = np.abs(C)
    rows, cols = linear_sum_assignment(-absC)
    P = np.zeros_like(absC)
    P[rows, cols] = 1
    perm = np.empty(len(cols), dtype=int)
    perm[cols] = rows
    return CrossGram(C, float(np.max(np.abs(absC - P))), absC.max(axis=0), perm)


def eigenvector_residuals(A, vectors, precision=None) -> np.ndarray:
    """``||A y - (y^T A y) y||`` per column ``y`` (normalized first), at ``A``'s precision."""
    A, be = _matrix_and_backend(A, precision)
    Y = np.asarray(vectors)
    out = []
    for c in range(Y.shape[1]):
        y = be.array(Y[:, c]) if not be.is_double else np.asarray(Y[:, c], dtype=float)
        y = y / be.sqrt(sum(v * v for v in y))
        Ay = A @ y
        mu = sum(a * b for a, b in zip(y, Ay))
        r = Ay - mu * y
        out.append(float(be.sqrt(sum(v * v for v in r))))
    return np.array(out)


def eigenvector_angles(vectors, reference: SpectralDecomposition) -> np.ndarray:
    """Sine of the angle between each column and the closest reference eigenvector.

    Tight clusters of reference eigenvalues are not merged, so a vector lying
    in the span of a cluster still reports a large angle.
    """
    be = reference.backend
    X = reference.eigenvectors
    Y = np.asarray(vectors)
    out = []
    for c in range(Y.shape[1]):
        y = be.array(Y[:, c]) if not be.is_double else np.asarray(Y[:, c], dtype=float)
        y = y / be.sqrt(sum(v * v for v in y))
        best = max(abs(sum(a * b for a, b in zip(y, X[:, k]))) for k in range(X.shape[1]))
        out.append(float(be.sqrt(max(1 - best * best, 0 * best))))
    return np.array(out)


@dataclass(frozen=True)
class ConditioningReport:
    M_min_gap: float
    M_median_gap: float
    L_min_gap: float
    L_median_gap: float
    gap_ratio: float                 # L_min_gap / ||L|| over M_min_gap / ||M||
    clustered: tuple                 # index pairs of M eigenvalues closer than the cluster tolerance
    cluster_tol: float
    outside_unit_interval: tuple     # M eigenvalues outside [-tol, 1 + tol]


def _gaps(values):
    v = sorted(float(x) for x in values)
    return [b - a for a, b in zip(v, v[1:])]


def conditioning_report(M_decomp: SpectralDecomposition, L_decomp: SpectralDecomposition | None = None,
                        *, range_tol: float = 1e-12) -> ConditioningReport:
    """Eigenvalue gap statistics of ``M`` (and ``L``).

    Pairs of ``M`` eigenvalues within ``1e3`` machine epsilons of each other
    are flagged, as are eigenvalues outside ``[-range_tol, 1 + range_tol]``,
    which no exact Gram matrix of a sub-interval can have.
    """
    eps = float(np.finfo(float).eps)
    tol = 1e3 * eps
    mvals = [float(x) for x in M_decomp.eigenvalues]
    mg = _gaps(mvals)
    order = np.argsort(mvals)
    clustered = tuple((int(order[k]), int(order[k + 1])) for k, g in enumerate(mg) if g <= tol)
    outside = tuple(v for v in mvals if v < -range_tol or v > 1 + range_tol)
    m_min = min(mg) if mg else float("inf")
    m_med = statistics.median(mg) if mg else float("inf")
    if L_decomp is not None:
        lvals = [float(x) for x in L_decomp.eigenvalues]
        lg = _gaps(lvals)
        l_min = min(lg) if lg else float("inf")
        l_med = statistics.median(lg) if lg else float("inf")
        m_norm = max(abs(v) for v in mvals) or 1.0
        l_norm = max(abs(v) for v in lvals) or 1.0
        ratio = (l_min / l_norm) / (m_min / m_norm) if m_min > 0 else float("inf")
    else:
        l_min = l_med = ratio = float("nan")
    return ConditioningReport(m_min, m_med, l_min, l_med, ratio, clustered, tol, outside)
