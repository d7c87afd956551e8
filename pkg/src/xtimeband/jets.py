"""Jets: a function's value and first ``k`` derivatives at a point.

Arithmetic is done on normalised Taylor coefficients ``f^(j)(x)/j!`` (Cauchy
products are then plain convolutions); :class:`Jet` exposes raw derivatives.
The leading axis of every coefficient array is the derivative order, any
trailing axes are carried along (vectorised evaluation at many points).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Jet:
    """``coeffs[j]`` is the ``j``-th derivative at ``point``."""

    point: object
    coeffs: np.ndarray

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self):
        return self.coeffs[0]

    def __getitem__(self, j):
        return self.coeffs[j]

    def taylor(self) -> np.ndarray:
        return to_taylor(self.coeffs)

    @classmethod
    def from_taylor(cls, point, taylor) -> "Jet":
        return cls(point, from_taylor(taylor))

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.point, self.coeffs[: order + 1])


def to_taylor(derivs):
    out = np.array(derivs, dtype=object if np.asarray(derivs).dtype == object else float, copy=True)
    for j in range(len(out)):
        out[j] = out[j] / math.factorial(j)
    return out


def from_taylor(taylor):
    out = np.array(taylor, dtype=object if np.asarray(taylor).dtype == object else float, copy=True)
    for j in range(len(out)):
        out[j] = out[j] * math.factorial(j)
    return out


def mul(f, g):
    """Truncated product; the result has the lower of the two orders."""
    n = min(len(f), len(g))
    out = [f[0] * g[0]]
    for j in range(1, n):
        acc = f[0] * g[j]
        for i in range(1, j + 1):
            acc = acc + f[i] * g[j - i]
        out.append(acc)
    return np.array(out)


def deriv(f):
    """Taylor coefficients of ``f'`` (order drops by one)."""
    return np.array([f[j + 1] * (j + 1) for j in range(len(f) - 1)])


def poly(coeffs, x0, order, one=1.0):
    """Taylor coefficients at ``x0`` of the polynomial ``sum coeffs[i] x**i``."""
    degree = len(coeffs) - 1
    out = []
    for j in range(order + 1):
        acc = 0 * one * x0
        for i in range(j, degree + 1):
            acc = acc + coeffs[i] * math.comb(i, j) * x0 ** (i - j)
        out.append(acc)
    return np.array(out)


def recip_linear(c, x0, order):
    """Taylor coefficients of ``1/(c - x)`` at ``x0``; requires ``x0 != c``."""
    d = c - x0
    return np.array([1 / d ** (j + 1) for j in range(order + 1)])


def recip(s):
    """Taylor coefficients of ``1/s``; requires ``s[0] != 0``."""
    out = [1 / s[0]]
    for j in range(1, len(s)):
        acc = s[1] * out[j - 1]
        for i in range(2, j + 1):
            acc = acc + s[i] * out[j - i]
        out.append(-acc / s[0])
    return np.array(out)
