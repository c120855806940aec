"""Wall-clock comparison of one FD field solve against per-cell re-integration."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, replace

import numpy as np

from .grid import GridSpec, validate_grid
from .oracle import numint_field
from .scheme import EXTENDED, HSPDEModel, sample_inputs, solve_batch
from .volatility import PathPair

FIELD_RTOL = 1e-12


@dataclass(frozen=True)
class BenchmarkResult:
    n_steps: int
    n_space: int
    fd_samples: tuple
    numint_samples: tuple
    checked: bool
    boundary_identical: bool | None
    field_max_diff: float | None  # relative to max(1, max |field|)

    @property
    def fd_median(self) -> float:
        return statistics.median(self.fd_samples)

    @property
    def numint_median(self) -> float:
        return statistics.median(self.numint_samples)

    @property
    def ratio(self) -> float:
        return self.numint_median / self.fd_median

    @property
    def outputs_agree(self) -> bool | None:
        if not self.checked:
            return None
        return bool(self.boundary_identical and self.field_max_diff <= FIELD_RTOL)

    def lines(self, label: str = "") -> list[str]:
        tag = f"[{label}] " if label else ""
        out = [f"{tag}grid: N={self.n_steps} J={self.n_space}"]
        if self.checked:
            out.append(f"{tag}equality: boundary bit-identical={self.boundary_identical}, "
                       f"field max scaled |diff|={self.field_max_diff:.3g}")
        else:
            out.append(f"{tag}equality: skipped (dt != dx, the two methods differ by design)")
        out.append(f"{tag}fd_seconds_median: {self.fd_median:.6g}")
        out.append(f"{tag}numint_seconds_median: {self.numint_median:.6g}")
        out.append(f"{tag}ratio_numint_over_fd: {self.ratio:.4g}")
        out.append(f"{tag}fd_samples: " + ",".join(f"{v:.6g}" for v in self.fd_samples))
        out.append(f"{tag}numint_samples: " + ",".join(f"{v:.6g}" for v in self.numint_samples))
        return out


def _time(fn, repeats: int, warmup: int):
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return tuple(samples)


def run_benchmark(model: HSPDEModel, grid: GridSpec, seed: int, repeats: int = 5,
                  warmup: int = 1) -> BenchmarkResult:
    """Time both methods on path 0's inputs; at ``dt == dx`` first confirm they agree."""
    validate_grid(grid)
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    model = replace(model, boundary_mode=EXTENDED)
    dM, a, s = sample_inputs(model, grid, seed, paths=1)
    pair = PathPair(t=grid.times(), a=a[0], sigma=s[0])
    width = grid.n_space + 1

    def fd():
        return solve_batch(model, grid, dM, a, s, retain=True)

    def numint():
        return numint_field(model, grid, dM[0], pair, width)

    checked = grid.dt == grid.dx
    identical = diff = None
    if checked:
        boundary, values = fd()
        ref = numint()
        identical = boundary[0].tobytes() == ref[:, 0].tobytes()
        # j > 0 cells differ from the oracle only by rounding of the kernel argument
        diff = float(np.max(np.abs(values[0, :, :width] - ref)) / max(1.0, np.max(np.abs(ref))))
    fd_samples = _time(fd, repeats, warmup)
    numint_samples = _time(numint, repeats, warmup)
    return BenchmarkResult(grid.n_steps, grid.n_space, fd_samples, numint_samples,
                           checked, identical, diff)
