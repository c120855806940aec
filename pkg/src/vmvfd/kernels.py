"""Deterministic stationary kernels ``g(u)``, ``u = t - s + x >= 0``.

Every kernel is a frozen dataclass that evaluates elementwise on floats and
numpy arrays.  Besides evaluation each variant reports an analytic Lipschitz
bound, a bound on ``sup |g|`` and whether its L1 / L2 tails converge; the tail
integrals themselves go through :mod:`vmvfd.quadrature`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import DivergenceError, NonLipschitzError, SingularityError

__all__ = [
    "Kernel",
    "Exponential",
    "BjerksundBlend",
    "PowerFBm",
    "RegularizedFBm",
    "Zero",
    "Constant",
    "Truncated",
    "Shifted",
    "TailNorms",
    "eval_kernel",
    "tail_norms",
    "truncation_horizon",
    "lipschitz_constant",
    "fbm_regularization_error",
    "fbm_regularization_error_exact",
]


def _as_array(u):
    return np.asarray(u, dtype=float)


def _scalar_or_array(values, u):
    if np.ndim(u) == 0:
        return float(values)
    return values


class Kernel:
    """Common interface for kernels of one nonnegative argument."""

    l1_tail_finite = True
    l2_tail_finite = True

    def _eval(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, u):
        arr = _as_array(u)
        return _scalar_or_array(self._eval(arr), u)

    def lipschitz(self, domain_max: float = math.inf) -> float:
        raise NotImplementedError

    def sup_abs(self, domain_max: float = math.inf) -> float:
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False


@dataclass(frozen=True)
class Exponential(Kernel):
    """``g(u) = exp(-alpha u)``."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha >= 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"Exponential: alpha must be finite and >= 0, got {self.alpha}")

    @property
    def l1_tail_finite(self):
        return self.alpha > 0.0

    @property
    def l2_tail_finite(self):
        return self.alpha > 0.0

    def _eval(self, u):
        return np.exp(-self.alpha * u)

    def lipschitz(self, domain_max=math.inf):
        return float(self.alpha)

    def sup_abs(self, domain_max=math.inf):
        return 1.0


@dataclass(frozen=True)
class BjerksundBlend(Kernel):
    """``g(u) = a exp(-alpha u) / (u + b)``, the Bjerksund kernel damped by an OU factor."""

    a: float
    b: float
    alpha: float

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError(f"BjerksundBlend: a must be > 0, got {self.a}")
        if not self.b > 0.0:
            raise ValueError(f"BjerksundBlend: b must be > 0, got {self.b}")
        if not self.alpha >= 0.0:
            raise ValueError(f"BjerksundBlend: alpha must be >= 0, got {self.alpha}")

    @property
    def l1_tail_finite(self):
        return self.alpha > 0.0

    def _eval(self, u):
        return self.a * np.exp(-self.alpha * u) / (u + self.b)

    def derivative(self, u):
        arr = _as_array(u)
        w = arr + self.b
        d = -self.a * np.exp(-self.alpha * arr) * (self.alpha * w + 1.0) / (w * w)
        return _scalar_or_array(d, u)

    def lipschitz(self, domain_max=math.inf):
        # |g'(u)| = a e^{-alpha u} (alpha (u+b) + 1) / (u+b)^2 is decreasing in u
        return float(self.a * (self.alpha * self.b + 1.0) / (self.b * self.b))

    def sup_abs(self, domain_max=math.inf):
        return float(self.a / self.b)


@dataclass(frozen=True)
class PowerFBm(Kernel):
    """``g(u) = u^(H - 1/2)``; singular (H < 1/2) or non-Lipschitz at the origin."""

    hurst: float

    l1_tail_finite = False
    l2_tail_finite = False

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"PowerFBm: hurst must lie in (0, 1), got {self.hurst}")

    def _eval(self, u):
        expo = self.hurst - 0.5
        if expo < 0.0 and np.any(u == 0.0):
            raise SingularityError(
                f"PowerFBm(H={self.hurst}) diverges at u=0; use RegularizedFBm instead"
            )
        with np.errstate(divide="ignore"):
            return np.power(u, expo)

    def lipschitz(self, domain_max=math.inf):
        if self.hurst == 0.5:
            return 0.0
        raise NonLipschitzError(
            f"PowerFBm(H={self.hurst}) has unbounded derivative at u=0; use RegularizedFBm"
        )

    def sup_abs(self, domain_max=math.inf):
        expo = self.hurst - 0.5
        if expo == 0.0:
            return 1.0
        if expo < 0.0:
            return math.inf
        return float(domain_max**expo)


@dataclass(frozen=True)
class RegularizedFBm(Kernel):
    """``u^(H-1/2)`` for ``u > eps``, frozen at ``eps^(H-1/2)`` on ``[0, eps]``."""

    hurst: float
    eps: float

    l1_tail_finite = False
    l2_tail_finite = False

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"RegularizedFBm: hurst must lie in (0, 1), got {self.hurst}")
        if not (self.eps > 0.0 and math.isfinite(self.eps)):
            raise ValueError(f"RegularizedFBm: eps must be > 0, got {self.eps}")

    def _eval(self, u):
        return np.power(np.maximum(u, self.eps), self.hurst - 0.5)

    def lipschitz(self, domain_max=math.inf):
        return float(abs(self.hurst - 0.5) * self.eps ** (self.hurst - 1.5))

    def sup_abs(self, domain_max=math.inf):
        expo = self.hurst - 0.5
        if expo <= 0.0:
            return float(self.eps**expo)
        return float(max(self.eps, domain_max) ** expo)


@dataclass(frozen=True)
class Zero(Kernel):
    def _eval(self, u):
        return np.zeros_like(u)

    def lipschitz(self, domain_max=math.inf):
        return 0.0

    def sup_abs(self, domain_max=math.inf):
        return 0.0

    def is_zero(self):
        return True


@dataclass(frozen=True)
class Constant(Kernel):
    c: float

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise ValueError(f"Constant: c must be finite, got {self.c}")

    @property
    def l1_tail_finite(self):
        return self.c == 0.0

    @property
    def l2_tail_finite(self):
        return self.c == 0.0

    def _eval(self, u):
        return np.full_like(u, self.c)

    def lipschitz(self, domain_max=math.inf):
        return 0.0

    def sup_abs(self, domain_max=math.inf):
        return abs(float(self.c))

    def is_zero(self):
        return self.c == 0.0


@dataclass(frozen=True)
class Truncated(Kernel):
    """``base(u)`` on ``[0, support]`` and zero beyond; always has finite tails."""

    base: Kernel
    support: float

    def __post_init__(self):
        if not (self.support >= 0.0 and math.isfinite(self.support)):
            raise ValueError(f"Truncated: support must be finite and >= 0, got {self.support}")

    def _eval(self, u):
        inside = u <= self.support
        vals = self.base._eval(np.where(inside, u, self.support))
        return np.where(inside, vals, 0.0)

    def lipschitz(self, domain_max=math.inf):
        if domain_max > self.support and self.base(self.support) != 0.0:
            raise NonLipschitzError(
                f"Truncated kernel jumps by {self.base(self.support)!r} at u={self.support}"
            )
        return self.base.lipschitz(min(domain_max, self.support))

    def sup_abs(self, domain_max=math.inf):
        return self.base.sup_abs(min(domain_max, self.support))


@dataclass(frozen=True)
class Shifted(Kernel):
    """``base(u + shift)``: the kernel seen from a forward offset ``shift``."""

    base: Kernel
    shift: float

    def __post_init__(self):
        if not self.shift >= 0.0:
            raise ValueError(f"Shifted: shift must be >= 0, got {self.shift}")

    @property
    def l1_tail_finite(self):
        return self.base.l1_tail_finite

    @property
    def l2_tail_finite(self):
        return self.base.l2_tail_finite

    def _eval(self, u):
        return self.base._eval(u + self.shift)

    def lipschitz(self, domain_max=math.inf):
        return self.base.lipschitz(domain_max + self.shift)

    def sup_abs(self, domain_max=math.inf):
        return self.base.sup_abs(domain_max + self.shift)

    def is_zero(self):
        return self.base.is_zero()


def eval_kernel(k: Kernel, u):
    """Evaluate ``k`` at ``u >= 0`` (scalar or array)."""
    if np.any(_as_array(u) < 0.0):
        raise ValueError("kernel argument must be nonnegative")
    return k(u)


@dataclass(frozen=True)
class TailNorms:
    l1_tail: float
    l2_tail_sq: float
    horizon: float

    @property
    def combined(self) -> float:
        """``l1_tail**2 + l2_tail_sq``, the kernel part of the truncation error."""
        return self.l1_tail**2 + self.l2_tail_sq


def _tail(k: Kernel, r: float, which: str) -> float:
    finite = k.l1_tail_finite if which == "l1" else k.l2_tail_finite
    if which == "l1":
        integrand = lambda u: abs(k(u))  # noqa: E731
    else:
        integrand = lambda u: k(u) ** 2  # noqa: E731
    if k.is_zero():
        return 0.0
    if isinstance(k, Truncated):
        if r >= k.support:
            return 0.0
        return quadrature.integrate_interval(integrand, r, k.support)
    if not finite:
        raise DivergenceError(f"{which.upper()} tail of {k!r} diverges")
    return quadrature.integrate_tail(integrand, r)


def tail_norms(k_drift: Kernel, k_vol: Kernel, r: float) -> TailNorms:
    """Tail norms ``int_r^inf |p|`` and ``int_r^inf g^2`` of the drift and volatility kernels."""
    if not math.isfinite(r):
        raise ValueError(f"horizon must be finite, got {r}")
    r = max(float(r), 0.0)
    return TailNorms(l1_tail=_tail(k_drift, r, "l1"), l2_tail_sq=_tail(k_vol, r, "l2"), horizon=r)


def truncation_horizon(k_drift: Kernel, k_vol: Kernel, tol: float) -> float:
    """Smallest history length ``r`` whose tail norm ``l1^2 + l2^2`` is at most ``tol**2``.

    Bisection on ``r`` stops once the combined norm (square-rooted) at the two
    brackets differs by at most ``1e-2 * tol``; the upper bracket is returned,
    so the result always satisfies the tolerance.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    target = tol * tol

    def norm(r):
        return tail_norms(k_drift, k_vol, r).combined

    lo_val = norm(0.0)
    if lo_val <= target:
        return 0.0
    lo, hi = 0.0, 1.0
    hi_val = norm(hi)
    while hi_val > target:
        lo, lo_val = hi, hi_val
        hi *= 2.0
        if hi > 1e12:
            raise DivergenceError("tail norm does not fall below tol")
        hi_val = norm(hi)
    resolution = 1e-2 * tol
    while math.sqrt(lo_val) - math.sqrt(hi_val) > resolution and hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        mid_val = norm(mid)
        if mid_val <= target:
            hi, hi_val = mid, mid_val
        else:
            lo, lo_val = mid, mid_val
    return hi


def lipschitz_constant(k: Kernel, domain_max: float = math.inf) -> float:
    """Analytic upper bound on ``sup |g'|`` over ``[0, domain_max]``."""
    return k.lipschitz(domain_max)


def fbm_regularization_error(hurst: float, eps: float) -> float:
    """Bound ``(2 + 1/H) eps^(2H)`` on ``||u^(H-1/2) - h_eps||^2`` in L2(R+)."""
    RegularizedFBm(hurst, eps)  # range checks
    return (2.0 + 1.0 / hurst) * eps ** (2.0 * hurst)


def fbm_regularization_error_exact(hurst: float, eps: float) -> float:
    """Quadrature value of ``int_0^eps (u^(H-1/2) - eps^(H-1/2))^2 du``.

    With ``u = eps s^2`` the integrand becomes ``2 eps^(2H) s (s^(2H-1) - 1)^2``,
    which is bounded on [0, 1] for every H in (0, 1).
    """
    RegularizedFBm(hurst, eps)
    expo = 2.0 * hurst - 1.0

    def integrand(s):
        # Gauss-Kronrod nodes are interior, so s > 0 here
        return s * (s**expo - 1.0) ** 2

    return 2.0 * eps ** (2.0 * hurst) * quadrature.integrate_interval(integrand, 0.0, 1.0)
