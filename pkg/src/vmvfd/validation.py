"""Self-checks of the solver against its oracles.

Each check returns a :class:`CheckResult` with status ``PASS``, ``FAIL`` or
``SKIP`` (the check does not apply to the model) and the measured numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import kernels as K
from .drivers import Brownian, stream_rng
from .errors import NonLipschitzError, UnsupportedError
from .grid import GridSpec
from .oracle import (error_budget, exact_ou_mse, fine_grid_mse, lattice_moments, moments_formula,
                     numint_boundary)
from .scheme import (EXTENDED, HSPDEModel, apply_T_iterated, apply_T_power, representation_sum,
                     sample_inputs, simulate_boundaries, solve_batch)
from .volatility import Deterministic, PathPair

PASS, FAIL, SKIP = "PASS", "FAIL", "SKIP"


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    detail: str
    table: tuple = ()

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def line(self) -> str:
        return f"{self.status} {self.name}: {self.detail}"


def _pathpair(grid, a, sigma):
    return PathPair(t=grid.times(), a=a, sigma=sigma)


def check_lambda1(model: HSPDEModel, grid: GridSpec, seed: int, trials: int = 5) -> CheckResult:
    """FD boundary and re-integrated boundary coincide bit for bit when ``dx = dt``."""
    g1 = GridSpec(grid.t0, grid.dt, grid.n_steps, grid.dt, 0)
    m = replace(model, boundary_mode=EXTENDED)
    worst = 0.0
    identical = 0
    for i in range(trials):
        dM, a, s = sample_inputs(m, g1, seed, paths=1, first_index=i)
        fd = solve_batch(m, g1, dM, a, s)[0]
        ref = numint_boundary(m, g1, dM[0], _pathpair(g1, a[0], s[0]))
        identical += fd.tobytes() == ref.tobytes()
        worst = max(worst, float(np.max(np.abs(fd - ref))))
    status = PASS if identical == trials else FAIL
    return CheckResult("lambda1_exactness", status,
                       f"{identical}/{trials} paths bit-identical, max |diff| = {worst:.3g}")


def check_representation(model: HSPDEModel, grid: GridSpec, seed: int, trials: int = 5,
                         size: int = 8, rtol: float = 1e-10) -> CheckResult:
    """Closed-form operator sum against the iterated scheme on a small grid with the same ratio."""
    small = GridSpec(grid.t0, grid.dt, size, grid.dx, size)
    m = replace(model, boundary_mode=EXTENDED)
    rng = stream_rng(seed, "validate-representation")
    worst = 0.0
    for i in range(trials):
        dM, a, s = sample_inputs(m, small, seed, paths=1, first_index=i)
        _, values = solve_batch(m, small, dM, a, s, retain=True)
        n, j = int(rng.integers(0, size + 1)), int(rng.integers(0, size + 1))
        rep = representation_sum(m, small, dM[0], _pathpair(small, a[0], s[0]), n, j)
        fd = values[0, n, j]
        worst = max(worst, abs(rep - fd) / max(1.0, abs(fd)))
    return CheckResult("representation_identity", PASS if worst <= rtol else FAIL,
                       f"max relative diff {worst:.3g} (tol {rtol:g}) over {trials} trials")


def check_binomial(seed: int, rtol: float = 1e-12) -> CheckResult:
    """Binomial form of ``T^m`` against ``m`` applications of ``T``, plus exact lattice moments."""
    rng = stream_rng(seed, "validate-binomial")
    worst = 0.0
    for lam in (0.25, 0.5, 1.0):
        for m in (0, 1, 2, 7, 16, 33, 64):
            f = rng.standard_normal(m + 5)
            direct = apply_T_power(f, m, 1.0, lam, 0)
            iterated = apply_T_iterated(f, m, lam)[0]
            worst = max(worst, abs(direct - iterated) / max(1.0, abs(iterated)))
    exact = True
    for m in (1, 5, 64):
        dx, dt = Fraction(1, 10), Fraction(1, 40)
        mean, var = lattice_moments(m, dx, dt)
        exact &= mean == m * dt and var == m * dt * (dx - dt)
    status = PASS if worst <= rtol and exact else FAIL
    return CheckResult("binomial_identity", status,
                       f"max relative diff {worst:.3g} (tol {rtol:g}); lattice moments exact: {exact}")


def check_moments(model: HSPDEModel, grid: GridSpec, seed: int, paths: int) -> CheckResult:
    """Monte Carlo ``E[X(t_N)^2]`` within four standard errors of the formula."""
    try:
        _, second = moments_formula(model, grid.t_end, grid.t0)
    except UnsupportedError as exc:
        return CheckResult("moment_matching", SKIP, str(exc))
    if paths < 2:
        return CheckResult("moment_matching", SKIP, "needs at least 2 paths")
    g0 = GridSpec(grid.t0, grid.dt, grid.n_steps, grid.dx, 0)
    x = simulate_boundaries(replace(model, boundary_mode=EXTENDED), g0, seed, paths)[:, -1]
    sq = x * x
    est, se = float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(paths))
    dev = abs(est - second)
    ok = dev <= 4.0 * se or dev <= 1e-12 * max(1.0, abs(second))
    return CheckResult("moment_matching", PASS if ok else FAIL,
                       f"E[X^2] MC {est:.6g} +- {se:.3g} vs formula {second:.6g} "
                       f"({dev / se if se > 0 else 0.0:.2f} SE, {paths} paths)")


def check_budget(model: HSPDEModel, grid: GridSpec, seed: int, paths: int, refine: int = 8) -> CheckResult:
    """Mean-square gap to a refined solve stays below the a-priori budget at every time."""
    try:
        budgets = np.array([error_budget(model, grid, n).total for n in range(grid.n_steps + 1)])
    except (NonLipschitzError, UnsupportedError) as exc:
        return CheckResult("budget_domination", SKIP, str(exc))
    if paths < 2:
        return CheckResult("budget_domination", SKIP, "needs at least 2 paths")
    mse, _ = fine_grid_mse(replace(model, boundary_mode=EXTENDED), grid, paths, seed, refine=refine)
    ratio = float(np.max(mse[1:] / budgets[1:]))
    return CheckResult("budget_domination", PASS if ratio <= 1.0 else FAIL,
                       f"max mse/budget {ratio:.3g} over {grid.n_steps} times "
                       f"({paths} paths, refinement x{refine})")


def exact_ou_table(decay: float, lam: float, seed: int, paths: int, sigma: float = 1.0,
                   variance_rate: float = 1.0, dts=(0.04, 0.02, 0.01), horizon: float = 1.0):
    """Rows ``(dt, rmse, mse, se, budget)`` at ``t = horizon`` for the exact-OU comparison."""
    rows = []
    model = HSPDEModel(vol_kernel=K.Exponential(decay), volatility=Deterministic(sigma),
                       driver=Brownian(variance_rate))
    for dt in dts:
        n = int(round(horizon / dt))
        grid = GridSpec(0.0, dt, n, dt / lam, 0)
        mse, se = exact_ou_mse(decay, grid, paths, seed, sigma=sigma, variance_rate=variance_rate)
        budget = error_budget(model, grid, n).total
        rows.append((dt, math.sqrt(mse[-1]), float(mse[-1]), float(se[-1]), budget))
    return rows


def check_exact_ou(model: HSPDEModel, grid: GridSpec, seed: int, paths: int) -> CheckResult | None:
    """RMSE table against the exact OU path; ``None`` unless the model is an OU process."""
    vol = model.volatility
    if not (isinstance(model.vol_kernel, K.Exponential) and model.drift_kernel.is_zero()
            and isinstance(vol, Deterministic) and vol.is_constant and isinstance(model.driver, Brownian)):
        return None
    rows = exact_ou_table(model.vol_kernel.alpha, grid.lam, seed, paths, sigma=vol.value,
                          variance_rate=model.driver.variance_rate)
    rmse = [r[1] for r in rows]
    decreasing = all(b < a for a, b in zip(rmse, rmse[1:]))
    dominated = all(r[2] <= r[4] for r in rows)
    detail = "; ".join(f"dt={r[0]:g} rmse={r[1]:.4g} budget={r[4]:.4g}" for r in rows)
    return CheckResult("exact_ou_convergence", PASS if decreasing and dominated else FAIL, detail,
                       table=tuple(rows))


def run_all(model: HSPDEModel, grid: GridSpec, seed: int, paths: int = 2000,
            budget_paths: int = 200) -> list[CheckResult]:
    results = [
        check_lambda1(model, grid, seed),
        check_representation(model, grid, seed),
        check_binomial(seed),
        check_moments(model, grid, seed, paths),
        check_budget(model, grid, seed, min(paths, budget_paths)),
    ]
    ou = check_exact_ou(model, grid, seed, paths)
    if ou is not None:
        results.append(ou)
    return results
