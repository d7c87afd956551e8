"""Precision backends.

Everything numeric in the package runs on one of two backends:

* ``precision=None`` (or 53): native IEEE doubles held in ``float64`` arrays;
* ``precision=p`` with ``p > 53``: mpmath big floats with ``p`` bits of
  mantissa, held in numpy ``object`` arrays so that the same vectorised
  arithmetic works for both.

Each big-float backend owns a private :class:`mpmath.MPContext`, so results
never depend on (or disturb) the global ``mpmath.mp`` precision.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import mpmath
import numpy as np

DOUBLE_BITS = 53
ENV_PRECISION = "XTIMEBAND_PRECISION"


def default_precision() -> int | None:
    """Precision used by the CLI when no flag is given (env override)."""
    raw = os.environ.get(ENV_PRECISION)
    if not raw:
        return None
    return normalize_precision(int(raw))


def normalize_precision(bits: int | None) -> int | None:
    if bits is None or bits == DOUBLE_BITS:
        return None
    bits = int(bits)
    if bits < DOUBLE_BITS:
        raise ValueError(f"precision must be at least {DOUBLE_BITS} bits, got {bits}")
    return bits


class Backend:
    """Scalar constructors and elementwise functions for one precision."""

    def __init__(self, bits: int | None):
        self.bits = normalize_precision(bits)
        if self.bits is None:
            self.ctx = None
            self.eps = float(np.finfo(float).eps)
            self.pi = np.pi
        else:
            self.ctx = mpmath.MPContext()
            self.ctx.prec = self.bits
            self.eps = self.ctx.eps
            self.pi = self.ctx.pi
            self._exp = np.frompyfunc(self.ctx.exp, 1, 1)
            self._sqrt = np.frompyfunc(self.ctx.sqrt, 1, 1)
            self._log = np.frompyfunc(self.ctx.log, 1, 1)
            self._erf = np.frompyfunc(self.ctx.erf, 1, 1)
            self._abs = np.frompyfunc(abs, 1, 1)
            self._pow = np.frompyfunc(self.ctx.power, 2, 1)

    @property
    def is_double(self) -> bool:
        return self.bits is None

    @property
    def dtype(self):
        return float if self.is_double else object

    @property
    def precision_bits(self) -> int:
        return DOUBLE_BITS if self.is_double else self.bits

    def __repr__(self) -> str:
        return f"Backend(bits={self.precision_bits})"

    # scalars -------------------------------------------------------------

    def const(self, value):
        """Convert an int, Fraction, float, decimal string or mpf to a scalar."""
        if isinstance(value, np.generic):
            value = value.item()
        if self.is_double:
            if isinstance(value, str):
                return float(Fraction(value)) if "/" in value else float(value)
            return float(value)
        ctx = self.ctx
        if isinstance(value, Rational) and not isinstance(value, int):
            return ctx.mpf(value.numerator) / value.denominator
        if isinstance(value, str) and "/" in value:
            num, den = value.split("/")
            return ctx.mpf(num.strip()) / ctx.mpf(den.strip())
        return ctx.mpf(value)

    def param(self, value):
        """Convert a model parameter, reading floats by their shortest repr.

        A double such as ``1/3`` given on the command line is promoted to the
        exact rational it prints as whenever that rational is simple, so a
        big-float run with ``T=0.3333333333333333`` uses ``T=1/3``.
        """
        if isinstance(value, np.generic):
            value = value.item()
        if self.is_double or isinstance(value, (int, Fraction)):
            return self.const(value)
        if isinstance(value, float):
            frac = Fraction(value).limit_denominator(10**6)
            if float(frac) == value:
                return self.const(frac)
            return self.const(repr(value))
        return self.const(value)

    def array(self, values):
        arr = np.asarray(values, dtype=object)
        out = np.empty(arr.shape, dtype=self.dtype)
        flat_in, flat_out = arr.reshape(-1), out.reshape(-1)
        for i, v in enumerate(flat_in):
            flat_out[i] = self.const(v)
        return out

    def zeros(self, shape):
        if self.is_double:
            return np.zeros(shape)
        out = np.empty(shape, dtype=object)
        out.fill(self.ctx.zero)
        return out

    def eye(self, n):
        out = self.zeros((n, n))
        for i in range(n):
            out[i, i] = self.const(1)
        return out

    def to_float(self, arr) -> np.ndarray:
        return np.asarray(arr, dtype=float) if self.is_double else np.vectorize(float, otypes=[float])(arr)

    def convert(self, arr):
        """Re-express an array (from any backend) in this backend."""
        arr = np.asarray(arr)
        if self.is_double:
            return self.to_float(arr)
        out = np.empty(arr.shape, dtype=object)
        flat_in, flat_out = arr.reshape(-1), out.reshape(-1)
        for i, v in enumerate(flat_in):
            flat_out[i] = self.ctx.mpf(v)
        return out

    # elementwise functions ------------------------------------------------

    def exp(self, x):
        return np.exp(x) if self.is_double else self._apply(self._exp, x)

    def sqrt(self, x):
        return np.sqrt(x) if self.is_double else self._apply(self._sqrt, x)

    def log(self, x):
        return np.log(x) if self.is_double else self._apply(self._log, x)

    def erf(self, x):
        if self.is_double:
            from scipy.special import erf

            return erf(x)
        return self._apply(self._erf, x)

    def abs(self, x):
        return np.abs(x) if self.is_double else self._apply(self._abs, x)

    def power(self, x, y):
        if self.is_double:
            return np.power(x, y)
        return self._apply(self._pow, x, y)

    def gamma(self, x):
        if self.is_double:
            from scipy.special import gamma

            return float(gamma(x))
        return self.ctx.gamma(x)

    def factorial(self, n: int):
        return self.const(math.factorial(n))

    @staticmethod
    def _apply(ufunc, *args):
        res = ufunc(*args)
        if isinstance(res, np.ndarray) and res.dtype != object:
            res = res.astype(object)
        return res

    # linear algebra helpers ------------------------------------------------

    def matrix(self, arr):
        """mpmath matrix from an object array (big-float backends only)."""
        return self.ctx.matrix(arr.tolist())

    def from_matrix(self, mat) -> np.ndarray:
        out = np.empty((mat.rows, mat.cols), dtype=object)
        for i in range(mat.rows):
            for j in range(mat.cols):
                out[i, j] = mat[i, j]
        return out


@lru_cache(maxsize=None)
def backend(bits: int | None = None) -> Backend:
    """Shared backend for a precision (cached; backends are immutable)."""
    return Backend(bits)
