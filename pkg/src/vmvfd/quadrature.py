"""Adaptive quadrature on finite intervals and half-lines.

Thin wrapper around QUADPACK (``scipy.integrate.quad``, Gauss-Kronrod 21-point
rules) with the tolerances used throughout the package.  Infinite tails are
mapped onto [0, 1) with ``u = r + v / (1 - v)`` before integration so that the
same finite-interval rule handles both cases.
"""

from __future__ import annotations

import math
import warnings

from scipy import integrate

RTOL = 1e-10
LIMIT = 500


def integrate_interval(f, a: float, b: float, rtol: float = RTOL) -> float:
    """Integrate scalar ``f`` over ``[a, b]``."""
    if b < a:
        raise ValueError(f"empty interval [{a}, {b}]")
    if a == b:
        return 0.0
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            value, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=rtol, limit=LIMIT)
    except integrate.IntegrationWarning:
        # a pure relative target is unreachable when the integral is ~0
        value, _ = integrate.quad(f, a, b, epsabs=1e-300, epsrel=rtol, limit=LIMIT)
    return float(value)


def integrate_tail(f, r: float, rtol: float = RTOL) -> float:
    """Integrate scalar ``f`` over ``[r, inf)`` via ``u = r + v/(1-v)``."""
    if not math.isfinite(r):
        raise ValueError(f"tail start must be finite, got {r}")

    def mapped(v):
        if v >= 1.0:
            return 0.0
        w = 1.0 - v
        return f(r + v / w) / (w * w)

    return integrate_interval(mapped, 0.0, 1.0, rtol=rtol)
