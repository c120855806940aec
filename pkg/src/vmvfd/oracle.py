"""Independent references for the finite difference solver.

* :func:`numint_value` re-integrates the process at one point by a left-point
  Riemann-Ito sum, with no use of the space-time recursion.
* :func:`exact_ou_path` is the exact transition of the OU process obtained with
  an exponential kernel and constant volatility.
* :func:`moments_formula` gives the first two moments when ``a`` and ``sigma``
  are independent of the driver.
* :func:`truncation_error` and :func:`error_budget` are the a-priori error
  terms: kernel tail norms for cutting the history at ``t0``, and the
  ``C1 (dx - dt) + C2 dt^2 + C3 M_a + C4 M_sigma`` bound on the scheme error.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels as K
from . import quadrature
from .drivers import Brownian, stream_rng
from .errors import UnsupportedError
from .scheme import HSPDEModel, coefficients, sample_inputs, solve_batch
from .grid import GridSpec, validate_grid
from .volatility import Deterministic, OUSubordinator, sigma_modulus_bound, stationary_moments

__all__ = [
    "numint_value",
    "numint_boundary",
    "numint_field",
    "exact_ou_path",
    "moments_formula",
    "truncation_error",
    "truncation_constant",
    "ErrorBudget",
    "error_budget",
    "exact_ou_mse",
    "fine_grid_mse",
    "lattice_moments",
]

OU_AUX = "ou-aux"


def _increment_values(increments):
    return np.asarray(getattr(increments, "values", increments), dtype=float)


def numint_value(model: HSPDEModel, grid: GridSpec, increments, paths, n: int, x: float = 0.0) -> float:
    """``mu + sum_i [p(u_i) a_i + m g(u_i) sigma_i] dt + g(u_i) sigma_i dM^i``, ``u_i = (n-1-i) dt + x``.

    Terms are accumulated left to right in the same grouping as one FD step,
    which makes the boundary (``x = 0``) bit-identical to the solver when
    ``dt == dx``.
    """
    if x < 0.0:
        raise ValueError(f"offset x must be >= 0, got {x}")
    if not 0 <= n <= grid.n_steps:
        raise ValueError(f"n={n} outside 0..{grid.n_steps}")
    mu = float(model.mu)
    if n == 0:
        return mu
    dM = _increment_values(increments)[:n]
    u = np.arange(n - 1, -1, -1) * grid.dt + x
    alpha, beta = coefficients(model, u, np.asarray(paths.a)[:n], np.asarray(paths.sigma)[:n])
    terms = np.empty(2 * n + 1)
    terms[0] = mu
    terms[1::2] = alpha * grid.dt
    terms[2::2] = beta * dM
    # add.accumulate is strictly sequential, unlike np.sum
    return float(np.add.accumulate(terms)[-1])


def numint_boundary(model, grid, increments, paths) -> np.ndarray:
    return np.array([numint_value(model, grid, increments, paths, n) for n in range(grid.n_steps + 1)])


def numint_field(model, grid, increments, paths, width: int | None = None) -> np.ndarray:
    """Re-integrate every cell of the ``(N+1) x width`` rectangle independently."""
    if width is None:
        width = grid.n_space + 1
    out = np.empty((grid.n_steps + 1, width))
    for j in range(width):
        x = grid.x(j)
        for n in range(grid.n_steps + 1):
            out[n, j] = numint_value(model, grid, increments, paths, n, x)
    return out


def _ou_transition(decay: float, dt: float, variance_rate: float):
    """Variance of the exact innovation and its covariance with ``dM``."""
    if decay == 0.0:
        return variance_rate * dt, variance_rate * dt
    var_i = variance_rate * -math.expm1(-2.0 * decay * dt) / (2.0 * decay)
    cov = variance_rate * -math.expm1(-decay * dt) / decay
    return var_i, cov


def exact_ou_path(decay: float, sigma: float, grid: GridSpec, increments,
                  variance_rate: float = 1.0, aux=None) -> np.ndarray:
    """Exact OU values ``X_n = sigma int_{t0}^{t_n} exp(-decay (t_n - s)) dM(s)`` with ``X_0 = 0``.

    ``increments`` are the Brownian increments ``dM^n`` the solver consumes.
    The exact innovation ``I_n = int exp(-decay (t_{n+1} - s)) dM(s)`` is drawn
    jointly with ``dM^n`` as ``sd_I (rho z1 + sqrt(1 - rho^2) z2)`` where
    ``z1 = dM^n / sqrt(v dt)`` and ``z2`` comes from the auxiliary ``"ou-aux"``
    stream of the same seed and index (or ``aux`` when given), so the two
    paths are coupled exactly as on one Brownian path.
    """
    if decay < 0.0:
        raise ValueError("decay must be >= 0")
    dM = _increment_values(increments)
    if dM.size != grid.n_steps:
        raise ValueError("increment count does not match grid")
    dt = grid.dt
    if aux is None:
        seed = getattr(increments, "seed", None)
        if seed is None:
            raise ValueError("aux normals required when increments carry no seed")
        aux = stream_rng(seed, OU_AUX, getattr(increments, "index", 0)).standard_normal(dM.size)
    aux = np.asarray(aux, dtype=float)
    var_i, cov = _ou_transition(decay, dt, variance_rate)
    sd_i = math.sqrt(var_i)
    rho = min(1.0, cov / math.sqrt(variance_rate * dt * var_i))
    z1 = dM / math.sqrt(variance_rate * dt)
    eta = sd_i * (rho * z1 + math.sqrt(max(0.0, 1.0 - rho * rho)) * aux)
    e = math.exp(-decay * dt)
    x = np.empty(dM.size + 1)
    x[0] = 0.0
    for n in range(dM.size):
        x[n + 1] = e * x[n] + sigma * eta[n]
    return x


def _second_moment_sigma(vol) -> float:
    if isinstance(vol, Deterministic):
        if not vol.is_constant:
            raise UnsupportedError("moments_formula needs a constant or stationary volatility")
        return vol.value**2
    if isinstance(vol, OUSubordinator):
        return stationary_moments(vol)[0]
    raise UnsupportedError(f"unknown volatility model {vol!r}")


def _sup_second_moment_sigma(vol) -> float:
    if isinstance(vol, Deterministic):
        return vol.sup_square()
    if isinstance(vol, OUSubordinator):
        return stationary_moments(vol)[0]
    raise UnsupportedError(f"unknown volatility model {vol!r}")


def moments_formula(model: HSPDEModel, t: float, t0: float = 0.0) -> tuple[float, float]:
    """``(E[X(t)], E[X(t)^2])`` for the process started at ``t0``.

    The volatility must be constant or stationary (``E[sigma^2]`` is then the
    stationary mean of ``Z``) and the drift process constant.
    """
    if t < t0:
        raise ValueError("t must be >= t0")
    span = t - t0
    if not (isinstance(model.drift, Deterministic) and model.drift.is_constant):
        raise UnsupportedError("moments_formula needs a constant drift process")
    level = float(model.mu)
    if not model.drift_kernel.is_zero() and model.drift.value != 0.0:
        level += model.drift.value * quadrature.integrate_interval(model.drift_kernel, 0.0, span)
    m = model.drift_rate
    if m != 0.0 and not model.vol_kernel.is_zero():
        vol = model.volatility
        if not (isinstance(vol, Deterministic) and vol.is_constant):
            raise UnsupportedError("an uncompensated driver with stochastic volatility has a random drift")
        level += m * vol.value * quadrature.integrate_interval(model.vol_kernel, 0.0, span)
    second = level * level
    if not model.vol_kernel.is_zero():
        g2 = quadrature.integrate_interval(lambda u: model.vol_kernel(u) ** 2, 0.0, span)
        second += model.driver.variance_rate * _second_moment_sigma(model.volatility) * g2
    return level, second


def truncation_error(model: HSPDEModel, t: float, r: float) -> float:
    """Kernel part ``||p 1_tail||_1^2 + ||g 1_tail||_2^2`` of cutting the history at ``r``.

    ``r = -inf`` gives zero; ``r = t`` gives the full norms.
    """
    if r > t:
        raise ValueError("truncation point must not exceed t")
    if r == -math.inf:
        return 0.0
    return K.tail_norms(model.drift_kernel, model.vol_kernel, t - r).combined


def truncation_constant(model: HSPDEModel) -> float:
    """Upper bound ``max(E[a^2], E[L(1)^2] sup E[sigma^2])`` for the constant of the truncation error."""
    ea2 = model.drift.sup_square()
    el2 = model.driver.variance_rate + model.drift_rate**2
    return max(ea2, el2 * _sup_second_moment_sigma(model.volatility))


@dataclass(frozen=True)
class ErrorBudget:
    n: int
    dt: float
    dx: float
    c1: float
    c2: float
    c3: float
    c4: float
    modulus_a: float
    modulus_sigma: float
    lipschitz: float
    kernel_lipschitz: float
    k_bound: float
    bracket: float

    @property
    def total(self) -> float:
        return (self.c1 * (self.dx - self.dt) + self.c2 * self.dt**2
                + self.c3 * self.modulus_a + self.c4 * self.modulus_sigma)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        return d

    def to_text(self) -> str:
        return "".join(f"{k}: {v!r}\n" for k, v in self.as_dict().items())

    def to_csv(self) -> str:
        d = self.as_dict()
        return ",".join(d) + "\n" + ",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                                             for v in d.values()) + "\n"


def error_budget(model: HSPDEModel, grid: GridSpec, n: int) -> ErrorBudget:
    """A-priori bound on ``E|y_j^n - Y(t_n)(x_j)|^2``.

    ``L`` is the mean-square Lipschitz constant of the coefficients,
    ``Lip(g)^2 sup E[sigma^2]`` for ``beta`` and ``Lip(p)^2 sup a^2`` (plus the
    folded driver drift) for ``alpha``; ``K`` bounds ``g^2`` and ``p^2`` and is
    at least one.  Kernels without a Lipschitz constant raise
    :class:`~vmvfd.errors.NonLipschitzError`.
    """
    validate_grid(grid)
    if not 0 <= n <= grid.n_steps:
        raise ValueError(f"n={n} outside 0..{grid.n_steps}")
    domain = grid.x(grid.n_space) + grid.n_steps * grid.dx
    lip_p = model.drift_kernel.lipschitz(domain)
    lip_g = model.vol_kernel.lipschitz(domain)
    ea2 = model.drift.sup_square()
    es2 = _sup_second_moment_sigma(model.volatility)
    m = model.drift_rate
    l_alpha = lip_p**2 * ea2
    if m != 0.0:
        l_alpha = 2.0 * (l_alpha + m * m * lip_g**2 * es2)
    l_beta = lip_g**2 * es2
    lip = max(l_alpha, l_beta)
    sup_g = model.vol_kernel.sup_abs(domain)
    sup_p = model.drift_kernel.sup_abs(domain)
    k_bound = max(1.0, sup_g**2, sup_p**2, (m * sup_g) ** 2)

    span = n * grid.dt
    bracket = model.driver.variance_rate * span
    c1 = 3.0 * lip * span * (1.0 + 4.0 * span**2 + 4.0 * bracket)
    c2 = 12.0 * lip * (span**2 + bracket)
    c3 = 12.0 * k_bound * lip * span**2
    c4 = 12.0 * k_bound * bracket
    mod_a = model.drift.lattice_modulus()
    if isinstance(model.volatility, OUSubordinator):
        mod_s = sigma_modulus_bound(model.volatility, grid.dt)
    else:
        mod_s = model.volatility.lattice_modulus()
    return ErrorBudget(n=n, dt=grid.dt, dx=grid.dx, c1=c1, c2=c2, c3=c3, c4=c4,
                       modulus_a=mod_a, modulus_sigma=mod_s, lipschitz=lip,
                       kernel_lipschitz=max(lip_p, lip_g), k_bound=k_bound, bracket=bracket)


def exact_ou_mse(decay: float, grid: GridSpec, n_paths: int, seed: int,
                 sigma: float = 1.0, variance_rate: float = 1.0):
    """Per-time mean squared error of the FD boundary against :func:`exact_ou_path`.

    Returns ``(mse, stderr)`` arrays of length ``N + 1``.
    """
    model = HSPDEModel(vol_kernel=K.Exponential(decay), volatility=Deterministic(sigma),
                       driver=Brownian(variance_rate))
    boundary_grid = GridSpec(grid.t0, grid.dt, grid.n_steps, grid.dx, 0)
    dM, a, s = sample_inputs(model, boundary_grid, seed, paths=n_paths)
    fd = solve_batch(model, boundary_grid, dM, a, s)
    exact = np.empty_like(fd)
    for i in range(n_paths):
        aux = stream_rng(seed, OU_AUX, i).standard_normal(grid.n_steps)
        exact[i] = exact_ou_path(decay, sigma, boundary_grid, dM[i], variance_rate, aux=aux)
    sq = (fd - exact) ** 2
    return sq.mean(axis=0), sq.std(axis=0, ddof=1) / math.sqrt(n_paths)


def fine_grid_mse(model: HSPDEModel, grid: GridSpec, n_paths: int, seed: int, refine: int = 16):
    """Per-time mean squared difference between the boundary on ``grid`` and on ``grid`` refined ``refine`` times.

    Both solves share one fine sample: coarse increments are sums of
    ``refine`` fine ones and the coarse volatility is the fine path read at
    the coarse times.  Returns ``(mse, stderr)`` of length ``N + 1``.
    """
    coarse = GridSpec(grid.t0, grid.dt, grid.n_steps, grid.dx, 0)
    fine = coarse.refined(refine)
    validate_grid(coarse)
    dM_f, a_f, s_f = sample_inputs(model, fine, seed, paths=n_paths)
    dM_c = dM_f.reshape(n_paths, coarse.n_steps, refine).sum(axis=2)
    a_c = a_f[:, ::refine]
    s_c = s_f[:, ::refine]
    y_f = solve_batch(model, fine, dM_f, a_f, s_f)[:, ::refine]
    y_c = solve_batch(model, coarse, dM_c, a_c, s_c)
    sq = (y_c - y_f) ** 2
    return sq.mean(axis=0), sq.std(axis=0, ddof=1) / math.sqrt(n_paths)


def lattice_moments(m: int, dx, dt):
    """Mean and variance of ``dx Z``, ``Z ~ Binomial(m, dt/dx)``, by summation over the pmf.

    Works on any number type; pass :class:`fractions.Fraction` steps for exact
    arithmetic.
    """
    lam = dt / dx
    pmf = [math.comb(m, k) * lam**k * (1 - lam) ** (m - k) for k in range(m + 1)]
    mean = sum(p * k * dx for k, p in enumerate(pmf))
    var = sum(p * (k * dx - mean) ** 2 for k, p in enumerate(pmf))
    return mean, var
