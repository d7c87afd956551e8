"""Adaptive Gauss-Legendre panel quadrature for vector-valued integrands.

Works at double or big-float precision. Each panel is integrated with an
``n``-point Gauss-Legendre rule and again as the sum over its two halves; the
difference is the panel's error estimate and the finer value is kept. Panels
are bisected until every local estimate is below its share of ``tol``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ._numeric import Backend, backend
from .errors import QuadratureNonConvergence

DEFAULT_POINTS = 24


@lru_cache(maxsize=None)
def _gauss_legendre_cached(n: int, bits: int | None):
    be = backend(bits)
    x0, w0 = np.polynomial.legendre.leggauss(n)
    if be.is_double:
        return x0, w0
    ctx = be.ctx
    nodes, weights = [], []
    # Newton polish of the double-precision roots at working precision.
    for guess in x0:
        x = ctx.mpf(guess)
        for _ in range(100):
            p0, p1 = ctx.one, x
            for k in range(2, n + 1):
                p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
            dp = n * (x * p1 - p0) / (x * x - 1)
            dx = p1 / dp
            x -= dx
            if abs(dx) <= ctx.eps * 4:
                break
        p0, p1 = ctx.one, x
        for k in range(2, n + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        dp = n * (x * p1 - p0) / (x * x - 1)
        nodes.append(x)
        weights.append(2 / ((1 - x * x) * dp * dp))
    return np.array(nodes, dtype=object), np.array(weights, dtype=object)


def gauss_legendre(n: int, be: Backend):
    """Nodes and weights of the ``n``-point rule on ``[-1, 1]``."""
    return _gauss_legendre_cached(n, be.bits)


def _panel(f, a, b, nodes, weights):
    half = (b - a) / 2
    mid = (a + b) / 2
    x = mid + half * nodes
    vals = f(x)
    w = weights * half
    return np.tensordot(w, vals, axes=(0, 0))


def _max_abs(arr, be: Backend):
    if be.is_double:
        return float(np.max(np.abs(arr))) if np.size(arr) else 0.0
    return max((abs(v) for v in np.asarray(arr).reshape(-1)), default=be.ctx.zero)


def integrate(f, a, b, be: Backend, tol, *, points: int = DEFAULT_POINTS, initial_panels: int = 4,
              max_panels: int = 20000, relative: bool = False):
    """Integrate ``f`` over ``[a, b]``.

    ``f`` maps a 1-D node array to an array of shape ``(len(nodes), *S)``;
    the result has shape ``S``. With ``relative=True`` the tolerance is
    scaled by the largest component of the running estimate.

    Returns ``(value, error_estimate, panel_count)``.
    """
    nodes, weights = gauss_legendre(points, be)
    a = be.const(a)
    b = be.const(b)
    length = b - a
    if length == 0:
        shape = np.shape(f(np.array([a], dtype=be.dtype)))[1:]
        return be.zeros(shape), 0, 0

    edges = [a + length * i / initial_panels for i in range(initial_panels)] + [b]
    stack = []
    counter = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        stack.append((0, counter, lo, hi, _panel(f, lo, hi, nodes, weights)))
        counter += 1

    accepted = None
    total_err = 0
    coarse_total = sum(q for *_, q in stack)
    scale = _max_abs(coarse_total, be) if relative else 1
    budget = tol * (scale if relative and scale else 1)
    evaluated = len(stack)

    while stack:
        depth, _, lo, hi, coarse = stack.pop()
        mid = (lo + hi) / 2
        left = _panel(f, lo, mid, nodes, weights)
        right = _panel(f, mid, hi, nodes, weights)
        evaluated += 2
        fine = left + right
        err = _max_abs(fine - coarse, be)
        share = budget * (hi - lo) / length
        if err <= share or depth >= 200:
            if depth >= 200 and err > share:
                raise QuadratureNonConvergence(
                    f"panel [{float(lo):.3g}, {float(hi):.3g}] did not converge (estimate {float(err):.3g})")
            accepted = fine if accepted is None else accepted + fine
            total_err += err
            continue
        if evaluated > max_panels:
            raise QuadratureNonConvergence(
                f"more than {max_panels} panels needed for tolerance {float(tol):.3g} "
                f"at {be.precision_bits}-bit precision")
        stack.append((depth + 1, counter, lo, mid, left))
        stack.append((depth + 1, counter + 1, mid, hi, right))
        counter += 2
    return accepted, total_err, evaluated
