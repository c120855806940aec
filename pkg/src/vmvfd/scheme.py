"""Explicit finite difference solver for ``dY = (dY/dx + alpha) dt + beta dM``.

One step of the scheme reads

    y_j^{n+1} = lam y_{j+1}^n + (1 - lam) y_j^n + alpha_j^n dt + beta_j^n dM^n,

with ``lam = dt/dx <= 1``.  For the stationary models handled here the
coefficients separate as ``alpha_j^n = p(x_j) a(t_n-) + m g(x_j) sigma(t_n-)``
and ``beta_j^n = g(x_j) sigma(t_n-)``, where ``m`` is the drift removed from an
uncompensated driver.  The boundary column ``y_0^n`` is the simulated process.

Two boundary treatments are available.  ``extended_triangle`` starts from
``J + N + 1`` columns and loses one column per step, so every cell of the
``(N+1) x (J+1)`` rectangle is computed exactly.  ``zero_at_xJ`` keeps ``J + 1``
columns and pins the last one to the level ``mu``, which is accurate only when
the kernels have decayed by ``x_J``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .drivers import Brownian, LEVY, sample_increment_matrix
from .errors import DivergenceError
from .grid import GridSpec, validate_grid
from .volatility import Deterministic, drift_values, simulate_sigma

__all__ = [
    "GridSpec",
    "validate_grid",
    "HSPDEModel",
    "Field",
    "fd_step",
    "coefficients",
    "sample_inputs",
    "solve",
    "solve_batch",
    "simulate_boundaries",
    "apply_T_power",
    "apply_T_iterated",
    "representation_sum",
]

EXTENDED = "extended_triangle"
ZERO_AT_XJ = "zero_at_xJ"
BOUNDARY_MODES = (EXTENDED, ZERO_AT_XJ)


@dataclass(frozen=True)
class HSPDEModel:
    """Level ``mu``, kernels ``p`` (drift) and ``g`` (volatility), processes ``a`` and ``sigma``, driver."""

    mu: float = 0.0
    drift_kernel: K.Kernel = field(default_factory=K.Zero)
    vol_kernel: K.Kernel = field(default_factory=K.Zero)
    drift: Deterministic = field(default_factory=lambda: Deterministic(0.0))
    volatility: object = field(default_factory=lambda: Deterministic(1.0))
    driver: object = field(default_factory=Brownian)
    boundary_mode: str = EXTENDED
    zero_boundary_tol: float = 1e-3

    def __post_init__(self):
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ValueError(f"boundary_mode must be one of {BOUNDARY_MODES}, got {self.boundary_mode!r}")
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")

    @property
    def drift_rate(self) -> float:
        """Mean rate ``m`` of the driver that is folded into the drift coefficient."""
        return float(self.driver.mean_rate)

    def width(self, grid: GridSpec) -> int:
        """Number of spatial columns in the initial row."""
        if self.boundary_mode == EXTENDED:
            return grid.n_space + grid.n_steps + 1
        return grid.n_space + 1


def coefficients(model: HSPDEModel, u, a, s):
    """``(alpha, beta)`` at kernel argument ``u`` for drift value ``a`` and volatility ``s``.

    The FD solver and the numerical-integration oracle both go through this
    function so their coefficients agree to the last bit.
    """
    gu = model.vol_kernel(u)
    alpha = model.drift_kernel(u) * a + (model.drift_rate * gu) * s
    beta = gu * s
    return alpha, beta


@dataclass
class Field:
    """Solved values ``y_j^n`` plus their provenance.

    ``values`` has shape ``(N + 1, width)`` with NaN in cells the scheme never
    computes (the lower-right triangle in ``extended_triangle`` mode); ``mask``
    marks computed cells.  Both are ``None`` when the solve ran without
    retaining the field.
    """

    grid: GridSpec
    boundary: np.ndarray
    values: np.ndarray | None = None
    mask: np.ndarray | None = None
    mode: str = EXTENDED
    seed: int | None = None
    index: int = 0

    def rectangle(self) -> np.ndarray:
        """The ``(N + 1) x (J + 1)`` block on ``x_0 .. x_J``."""
        if self.values is None:
            raise ValueError("field values were not retained")
        return self.values[:, : self.grid.n_space + 1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()


def fd_step(row, alpha, beta, dM, lam: float, dt: float):
    """Advance one row; the result is one column shorter than ``row``.

    ``alpha`` and ``beta`` must be aligned with ``row`` along the last axis.
    """
    row = np.asarray(row, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if row.shape[-1] < 2:
        raise ValueError("row needs at least two entries")
    if alpha.shape[-1] != row.shape[-1] or beta.shape[-1] != row.shape[-1]:
        raise ValueError(
            f"coefficient rows (alpha {alpha.shape[-1]}, beta {beta.shape[-1]}) "
            f"not aligned with row of {row.shape[-1]}"
        )
    return lam * row[..., 1:] + (1.0 - lam) * row[..., :-1] + alpha[..., :-1] * dt + beta[..., :-1] * dM


def _check_zero_boundary(model: HSPDEModel, grid: GridSpec) -> None:
    x_end = grid.x(grid.n_space)
    try:
        tail = K.tail_norms(model.drift_kernel, model.vol_kernel, x_end).combined
    except DivergenceError:
        tail = math.inf
    if tail > model.zero_boundary_tol**2:
        warnings.warn(
            f"zero_at_xJ: kernel tail norm {tail:.3g} at x_J={x_end:.6g} exceeds "
            f"tol^2={model.zero_boundary_tol**2:.3g}; boundary values are biased",
            RuntimeWarning,
            stacklevel=3,
        )


def sample_inputs(model: HSPDEModel, grid: GridSpec, seed: int, paths: int = 1, first_index: int = 0):
    """Common random inputs ``(dM, a, sigma)`` of shapes ``(P, N)``, ``(P, N+1)``, ``(P, N+1)``."""
    dM = sample_increment_matrix(model.driver, grid.dt, grid.n_steps, seed, paths,
                                 stream=LEVY, first_index=first_index, compensate=True)
    sigma = simulate_sigma(model.volatility, grid, seed, paths=paths, first_index=first_index)
    a = drift_values(model.drift, grid, paths)
    return dM, a, sigma


def solve_batch(model: HSPDEModel, grid: GridSpec, dM, a, sigma, retain: bool = False):
    """March ``P`` independent paths at once.

    Returns the boundaries ``(P, N + 1)``, or ``(boundaries, values)`` with
    values of shape ``(P, N + 1, width)`` when ``retain`` is set.
    """
    validate_grid(grid)
    dM = np.atleast_2d(np.asarray(dM, dtype=float))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    n_paths, n_steps = dM.shape
    if n_steps != grid.n_steps:
        raise ValueError(f"got {n_steps} increments for a grid of {grid.n_steps} steps")
    if a.shape != (n_paths, n_steps + 1) or sigma.shape != (n_paths, n_steps + 1):
        raise ValueError("a and sigma must have shape (paths, N + 1)")
    if model.boundary_mode == ZERO_AT_XJ:
        _check_zero_boundary(model, grid)

    width = model.width(grid)
    xs = grid.xs(width)
    pvals = model.drift_kernel(xs)
    gvals = model.vol_kernel(xs)
    mgvals = model.drift_rate * gvals
    lam, dt = grid.lam, grid.dt
    extended = model.boundary_mode == EXTENDED

    row = np.full((n_paths, width), float(model.mu))
    boundary = np.empty((n_paths, n_steps + 1))
    boundary[:, 0] = row[:, 0]
    values = None
    if retain:
        values = np.full((n_paths, n_steps + 1, width), np.nan)
        values[:, 0, :] = row
    for n in range(n_steps):
        w = row.shape[1]
        an = a[:, n, None]
        sn = sigma[:, n, None]
        # same operation order as coefficients()
        alpha = pvals[:w] * an + mgvals[:w] * sn
        beta = gvals[:w] * sn
        new = fd_step(row, alpha, beta, dM[:, n, None], lam, dt)
        if not extended:
            new = np.concatenate([new, np.full((n_paths, 1), float(model.mu))], axis=1)
        row = new
        boundary[:, n + 1] = row[:, 0]
        if retain:
            values[:, n + 1, : row.shape[1]] = row
    if retain:
        return boundary, values
    return boundary


def solve(model: HSPDEModel, grid: GridSpec, seed: int = 0, *, index: int = 0,
          increments=None, paths=None, retain: bool = True) -> Field:
    """Solve one path.

    ``increments`` (an :class:`~vmvfd.drivers.IncrementStream` or array) and
    ``paths`` (a :class:`~vmvfd.volatility.PathPair`) override sampling so the
    caller can reuse common random numbers; otherwise both are drawn from
    ``seed`` for path ``index``.
    """
    validate_grid(grid)
    if increments is None or paths is None:
        dM, a, sigma = sample_inputs(model, grid, seed, paths=1, first_index=index)
    if increments is not None:
        dM = np.asarray(getattr(increments, "values", increments), dtype=float)[None, :]
    if paths is not None:
        a = np.asarray(paths.a, dtype=float)[None, :]
        sigma = np.asarray(paths.sigma, dtype=float)[None, :]
    if retain:
        boundary, values = solve_batch(model, grid, dM, a, sigma, retain=True)
        values = values[0]
        mask = ~np.isnan(values)
    else:
        boundary = solve_batch(model, grid, dM, a, sigma)
        values = mask = None
    return Field(grid=grid, boundary=boundary[0], values=values, mask=mask,
                 mode=model.boundary_mode, seed=seed, index=index)


def simulate_boundaries(model: HSPDEModel, grid: GridSpec, seed: int, paths: int,
                        first_index: int = 0, chunk: int = 1024) -> np.ndarray:
    """Boundaries of paths ``first_index ..`` as a ``(paths, N + 1)`` array.

    Paths are marched in vectorized chunks; every path draws from its own
    streams, so the result does not depend on ``chunk``.
    """
    if paths < 1:
        raise ValueError("paths must be >= 1")
    out = np.empty((paths, grid.n_steps + 1))
    for start in range(0, paths, chunk):
        size = min(chunk, paths - start)
        dM, a, sigma = sample_inputs(model, grid, seed, paths=size, first_index=first_index + start)
        out[start : start + size] = solve_batch(model, grid, dM, a, sigma)
    return out


def _binomial_weights(m: int, lam: float) -> np.ndarray:
    return np.array([math.comb(m, k) * lam**k * (1.0 - lam) ** (m - k) for k in range(m + 1)])


def apply_T_power(f, m: int, dx: float, dt: float, j: int = 0) -> float:
    """``T^m f(x_j)`` for ``T = I + dt (S(dx) - I)/dx``, as a binomial average.

    ``T^m f(x) = sum_k C(m,k) lam^k (1-lam)^(m-k) f(x + k dx)`` with ``f``
    tabulated on the lattice ``f[k] = f(k dx)``.
    """
    lam = dt / dx
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"need 0 < dt/dx <= 1, got {lam}")
    if m < 0:
        raise ValueError("m must be nonnegative")
    f = np.asarray(f, dtype=float)
    if j < 0 or j + m >= f.size:
        raise ValueError(f"f is tabulated on {f.size} nodes; T^{m} at node {j} needs {j + m + 1}")
    return float(np.dot(_binomial_weights(m, lam), f[j : j + m + 1]))


def apply_T_iterated(f, m: int, lam: float) -> np.ndarray:
    """Apply ``T`` ``m`` times; the result loses ``m`` trailing nodes."""
    out = np.asarray(f, dtype=float)
    if m >= out.size:
        raise ValueError("not enough nodes for m applications of T")
    for _ in range(m):
        out = (1.0 - lam) * out[:-1] + lam * out[1:]
    return out


def representation_sum(model: HSPDEModel, grid: GridSpec, increments, paths, n: int, j: int) -> float:
    """Closed-form ``y_j^n = T^n y^0_j + sum_i T^{n-1-i} (alpha^i_j dt + beta^i_j dM^i)``.

    Valid for the ``extended_triangle`` boundary treatment, where no boundary
    values are imposed.
    """
    if not 0 <= n <= grid.n_steps:
        raise ValueError(f"n={n} outside 0..{grid.n_steps}")
    if not 0 <= j <= grid.n_space:
        raise ValueError(f"j={j} outside 0..{grid.n_space}")
    dM = np.asarray(getattr(increments, "values", increments), dtype=float)
    xs = grid.xs(j + n + 1)
    dt, dx = grid.dt, grid.dx
    total = apply_T_power(np.full(xs.size, float(model.mu)), n, dx, dt, j)
    for i in range(n):
        alpha, beta = coefficients(model, xs, paths.a[i], paths.sigma[i])
        m = n - 1 - i
        total += apply_T_power(alpha, m, dx, dt, j) * dt
        total += apply_T_power(beta, m, dx, dt, j) * dM[i]
    return total
