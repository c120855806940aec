"""Volatility ``sigma`` and drift process ``a`` sampled on the time grid.

The stochastic variant is the OU process driven by a subordinator ``U``,
``Z(t) = int_{-inf}^t exp(-lam (t - s)) dU(s)``, with ``sigma^2 = Z``.  On the
grid it is advanced by the left-point recursion

    Z_{n+1} = exp(-lam dt) * (Z_n + dU_n),

so ``sigma(t_n-) = sqrt(Z_n)`` only uses subordinator increments before
``t_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .drivers import CompoundPoisson, InverseGaussian, SUBORDINATOR, sample_increment_matrix
from .errors import UnsupportedError
from .grid import GridSpec, validate_grid

__all__ = [
    "Deterministic",
    "OUSubordinator",
    "PathPair",
    "ou_recursion",
    "stationary_moments",
    "sigma_modulus_bound",
    "simulate_sigma",
    "simulate_paths",
]

BURN_IN = "subordinator-burnin"


@dataclass(frozen=True)
class Deterministic:
    """Constant level, or a tabulated path with one value per grid time."""

    value: float | tuple = 1.0

    def __post_init__(self):
        if np.ndim(self.value) == 0:
            object.__setattr__(self, "value", float(self.value))
        else:
            object.__setattr__(self, "value", tuple(float(v) for v in self.value))
        if not np.all(np.isfinite(self.value)):
            raise ValueError("Deterministic: values must be finite")

    @property
    def is_constant(self) -> bool:
        return isinstance(self.value, float)

    def on_grid(self, grid: GridSpec) -> np.ndarray:
        if self.is_constant:
            return np.full(grid.n_steps + 1, self.value)
        arr = np.asarray(self.value, dtype=float)
        if arr.shape != (grid.n_steps + 1,):
            raise ValueError(
                f"tabulated path has {arr.size} values, grid needs {grid.n_steps + 1}"
            )
        return arr

    def sup_square(self) -> float:
        return float(np.max(np.square(self.value)))

    def mean_square(self) -> float:
        return float(np.mean(np.square(self.value)))

    def lattice_modulus(self) -> float:
        """``max_n |v_{n+1} - v_n|^2`` of the tabulated path (zero for a constant)."""
        if self.is_constant or len(self.value) < 2:
            return 0.0
        return float(np.max(np.diff(self.value) ** 2))


@dataclass(frozen=True)
class OUSubordinator:
    """``sigma^2 = Z`` with ``Z`` a subordinator-driven OU process of mean-reversion ``rate``.

    ``burn_in_tol`` sets the burn-in length ``log(1/tol)/rate`` used to forget
    the starting value; at most ``max_burn_in_steps`` steps are taken.
    """

    rate: float
    subordinator: InverseGaussian | CompoundPoisson
    burn_in_tol: float = 1e-6
    max_burn_in_steps: int = 1000

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError(f"OUSubordinator: rate must be > 0, got {self.rate}")
        if not 0.0 < self.burn_in_tol < 1.0:
            raise ValueError(f"OUSubordinator: burn_in_tol must lie in (0, 1), got {self.burn_in_tol}")
        sub = self.subordinator
        if not isinstance(sub, (InverseGaussian, CompoundPoisson)):
            raise ValueError("OUSubordinator: subordinator must be InverseGaussian or CompoundPoisson")
        if sub.compensated:
            raise ValueError("OUSubordinator: subordinator must be uncompensated (nondecreasing)")
        if isinstance(sub, CompoundPoisson) and sub.intensity > 0.0 and not sub.positive_jumps:
            raise ValueError("OUSubordinator: compound Poisson subordinator needs positive jumps")
        if self.max_burn_in_steps < 1:
            raise ValueError("OUSubordinator: max_burn_in_steps must be >= 1")

    @property
    def mean_rate(self) -> float:
        return float(self.subordinator.raw_mean_rate)

    @property
    def variance_rate(self) -> float:
        return float(self.subordinator.variance_rate)


@dataclass(frozen=True)
class PathPair:
    """Drift values ``a(t_n-)`` and volatility values ``sigma(t_n-)`` on grid times ``t``."""

    t: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    seed: int = 0
    index: int = 0

    def __post_init__(self):
        if not (self.t.shape == self.a.shape == self.sigma.shape):
            raise ValueError("PathPair arrays must share one shape")
        if np.any(self.sigma < 0.0):
            raise ValueError("volatility must be nonnegative")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("t,a,sigma\n")
            for t, a, s in zip(self.t, self.a, self.sigma):
                fh.write(f"{t:.17g},{a:.17g},{s:.17g}\n")


def ou_recursion(z0, increments, decay: float) -> np.ndarray:
    """Run ``Z_{n+1} = decay * (Z_n + dU_n)`` along the last axis.

    ``z0`` has the leading shape of ``increments``; the result carries one more
    entry (``Z_0 .. Z_N``) along the last axis.
    """
    inc = np.asarray(increments, dtype=float)
    out = np.empty(inc.shape[:-1] + (inc.shape[-1] + 1,))
    out[..., 0] = z0
    z = np.array(z0, dtype=float)
    for n in range(inc.shape[-1]):
        z = decay * (z + inc[..., n])
        out[..., n + 1] = z
    return out


def stationary_moments(v) -> tuple[float, float]:
    """Stationary mean ``m_U / rate`` and variance ``C_U / (2 rate)`` of ``Z``."""
    if not isinstance(v, OUSubordinator):
        raise UnsupportedError("stationary moments are defined for OUSubordinator only")
    return v.mean_rate / v.rate, v.variance_rate / (2.0 * v.rate)


def sigma_modulus_bound(v: OUSubordinator, dt: float) -> float:
    """Bound on ``sup_{|s-r| < dt} E|sigma(s) - sigma(r)|^2``: ``(2C/rate)(1 - exp(-rate dt / 2))``.

    ``C = E[U(1)^2] = C_U + m_U^2``.
    """
    if not isinstance(v, OUSubordinator):
        raise UnsupportedError("modulus bound is defined for OUSubordinator only")
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")
    c = v.variance_rate + v.mean_rate**2
    return 2.0 * c / v.rate * -math.expm1(-v.rate * dt / 2.0)


def _grid_stationary_mean(v: OUSubordinator, dt: float) -> float:
    # fixed point of z = e (z + m dt), e = exp(-rate dt)
    e = math.exp(-v.rate * dt)
    return v.mean_rate * dt * e / -math.expm1(-v.rate * dt)


def _burn_in(v: OUSubordinator, dt: float, seed: int, paths: int, first_index: int) -> np.ndarray:
    """Starting values ``Z_0`` after a burn-in of length ``log(1/tol)/rate``.

    Burn-in steps of length ``h >= dt`` carry the weight that makes the coarse
    chain's stationary mean equal to the grid chain's, so the mean of ``Z_0``
    matches the recursion used on the grid.
    """
    horizon = math.log(1.0 / v.burn_in_tol) / v.rate
    steps = min(math.ceil(horizon / dt), v.max_burn_in_steps)
    h = max(dt, horizon / steps)
    z_start = _grid_stationary_mean(v, dt)
    if v.mean_rate == 0.0:
        return np.full(paths, z_start)
    decay = math.exp(-v.rate * h)
    weight = z_start * -math.expm1(-v.rate * h) / (v.mean_rate * h)
    inc = sample_increment_matrix(v.subordinator, h, steps, seed, paths, stream=BURN_IN,
                                  first_index=first_index, compensate=False)
    z = np.full(paths, z_start)
    for k in range(steps):
        z = decay * z + weight * inc[:, k]
    return z


def simulate_sigma(v, grid: GridSpec, seed: int, paths: int = 1, first_index: int = 0,
                   z0=None) -> np.ndarray:
    """Volatility values ``sigma(t_n-)``, shape ``(paths, N + 1)``."""
    if isinstance(v, Deterministic):
        vals = v.on_grid(grid)
        if np.any(vals < 0.0):
            raise ValueError("deterministic volatility must be nonnegative")
        return np.broadcast_to(vals, (paths, vals.size)).copy()
    if not isinstance(v, OUSubordinator):
        raise UnsupportedError(f"unknown volatility model {v!r}")
    if z0 is None:
        z0 = _burn_in(v, grid.dt, seed, paths, first_index)
    else:
        z0 = np.broadcast_to(np.asarray(z0, dtype=float), (paths,))
        if np.any(z0 < 0.0):
            raise ValueError("z0 must be nonnegative")
    inc = sample_increment_matrix(v.subordinator, grid.dt, grid.n_steps, seed, paths,
                                  stream=SUBORDINATOR, first_index=first_index, compensate=False)
    z = ou_recursion(z0, inc, math.exp(-v.rate * grid.dt))
    return np.sqrt(z)


def drift_values(a_model, grid: GridSpec, paths: int = 1) -> np.ndarray:
    """Drift values ``a(t_n-)``, shape ``(paths, N + 1)``; only deterministic drifts are supported."""
    if not isinstance(a_model, Deterministic):
        raise UnsupportedError("the drift process must be Deterministic")
    vals = a_model.on_grid(grid)
    return np.broadcast_to(vals, (paths, vals.size)).copy()


def simulate_paths(v, a_model, grid: GridSpec, seed: int, index: int = 0, z0=None) -> PathPair:
    """Sample the (a, sigma) pair for path ``index``."""
    validate_grid(grid)
    sigma = simulate_sigma(v, grid, seed, paths=1, first_index=index, z0=z0)[0]
    a = drift_values(a_model, grid)[0]
    return PathPair(t=grid.times(), a=a, sigma=sigma, seed=seed, index=index)
