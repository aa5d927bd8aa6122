"""Adaptive Gauss-Legendre quadrature on rectangles and segments.

Integrands are vector-valued (one component per observation point); a panel
is accepted when the difference between its one-shot Gauss estimate and the
sum over its children is below the panel's share of the absolute tolerance.
Children estimates are kept, so the returned value is the refined one.
Panel traversal order is fixed, making results independent of thread count
and bitwise reproducible.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureNotConverged

GAUSS_ORDER = 8


@lru_cache(maxsize=None)
def _gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel_2d(f, lo, hi, order):
    """Tensor Gauss estimate of a vector integrand over [lo, hi]."""
    x, w = _gauss_rule(order)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    n1 = mid[0] + half[0] * x
    n2 = mid[1] + half[1] * x
    X1, X2 = np.meshgrid(n1, n2, indexing="ij")
    pts = np.stack([X1.ravel(), X2.ravel()], axis=-1)
    W = np.outer(w, w).ravel() * (half[0] * half[1])
    vals = np.asarray(f(pts))
    return np.tensordot(W, vals, axes=(0, 0))


def _panel_1d(f, a, b, order):
    x, w = _gauss_rule(order)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    vals = np.asarray(f(mid + half * x))
    return half * np.tensordot(w, vals, axes=(0, 0))


def adaptive_rectangle(
    f: Callable[[np.ndarray], np.ndarray],
    lo,
    hi,
    tol: float = 1e-9,
    max_depth: int = 12,
    order: int = GAUSS_ORDER,
) -> np.ndarray:
    """Integrate f over the rectangle [lo, hi] to absolute tolerance.

    ``f`` maps parameter points (N, 2) to values (N, ...); the error control
    is on the max-norm across trailing dimensions.  Raises
    QuadratureNotConverged when the depth cap is hit with the local error
    still above its tolerance share.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    w = hi - lo
    # balance strongly anisotropic domains before going adaptive
    n1 = max(1, int(np.ceil(w[0] / w[1]))) if w[1] > 0 else 1
    n2 = max(1, int(np.ceil(w[1] / w[0]))) if w[0] > 0 else 1
    total = None
    for i in range(n1):
        for j in range(n2):
            p_lo = lo + w * np.array([i / n1, j / n2])
            p_hi = lo + w * np.array([(i + 1) / n1, (j + 1) / n2])
            part = _adapt_2d(f, p_lo, p_hi, tol / (n1 * n2), 0, max_depth, order)
            total = part if total is None else total + part
    return total


def _adapt_2d(f, lo, hi, tol, depth, max_depth, order, coarse=None):
    if coarse is None:
        coarse = _panel_2d(f, lo, hi, order)
    mid = 0.5 * (lo + hi)
    quads = [
        (lo, mid),
        (np.array([mid[0], lo[1]]), np.array([hi[0], mid[1]])),
        (np.array([lo[0], mid[1]]), np.array([mid[0], hi[1]])),
        (mid, hi),
    ]
    fine_parts = [_panel_2d(f, a, b, order) for a, b in quads]
    fine = sum(fine_parts)
    err = float(np.max(np.abs(fine - coarse)))
    if err <= tol:
        return fine
    if depth >= max_depth:
        raise QuadratureNotConverged(
            f"2D panel error {err:.3e} > {tol:.3e} at depth cap {max_depth}",
            error_estimate=err,
            tolerance=tol,
        )
    out = None
    for (a, b), part in zip(quads, fine_parts):
        refined = _adapt_2d(f, a, b, tol / 4.0, depth + 1, max_depth, order, coarse=part)
        out = refined if out is None else out + refined
    return out


def adaptive_segment(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-9,
    max_depth: int = 12,
    order: int = GAUSS_ORDER,
) -> np.ndarray:
    """Integrate a vector integrand over [a, b] to absolute tolerance."""
    coarse = _panel_1d(f, a, b, order)
    return _adapt_1d(f, a, b, coarse, tol, 0, max_depth, order)


def _adapt_1d(f, a, b, coarse, tol, depth, max_depth, order):
    mid = 0.5 * (a + b)
    left = _panel_1d(f, a, mid, order)
    right = _panel_1d(f, mid, b, order)
    fine = left + right
    err = float(np.max(np.abs(fine - coarse)))
    if err <= tol:
        return fine
    if depth >= max_depth:
        raise QuadratureNotConverged(
            f"1D panel error {err:.3e} > {tol:.3e} at depth cap {max_depth}",
            error_estimate=err,
            tolerance=tol,
        )
    return _adapt_1d(f, a, mid, left, tol / 2.0, depth + 1, max_depth, order) + _adapt_1d(
        f, mid, b, right, tol / 2.0, depth + 1, max_depth, order
    )
