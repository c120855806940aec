"""Space-time lattice ``t_n = t0 + n dt``, ``x_j = j dx``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CFLError


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with ``n_steps`` time steps and spatial nodes ``0..n_space``.

    Coordinates are always recomputed from integer indices so nothing drifts
    through repeated addition.
    """

    t0: float
    dt: float
    n_steps: int
    dx: float
    n_space: int = 0

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (self.dx > 0.0 and math.isfinite(self.dx)):
            raise ValueError(f"dx must be > 0, got {self.dx}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        if int(self.n_space) != self.n_space or self.n_space < 0:
            raise ValueError(f"n_space must be a nonnegative integer, got {self.n_space}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "n_space", int(self.n_space))

    @property
    def lam(self) -> float:
        """CFL ratio ``dt / dx``."""
        return self.dt / self.dx

    @property
    def t_end(self) -> float:
        return self.t(self.n_steps)

    def t(self, n):
        return self.t0 + n * self.dt

    def x(self, j):
        return j * self.dx

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_steps + 1) * self.dt

    def xs(self, width: int | None = None) -> np.ndarray:
        """Spatial nodes ``x_0 .. x_{width-1}`` (default: the ``n_space + 1`` rectangle columns)."""
        if width is None:
            width = self.n_space + 1
        return np.arange(width) * self.dx

    def refined(self, factor: int) -> "GridSpec":
        """Same time span and CFL ratio with both steps divided by ``factor``."""
        return GridSpec(self.t0, self.dt / factor, self.n_steps * factor,
                        self.dx / factor, self.n_space * factor)


def validate_grid(grid: GridSpec) -> GridSpec:
    """Return ``grid`` if it satisfies ``dt <= dx``; raise :class:`CFLError` otherwise."""
    if not grid.dt <= grid.dx:
        raise CFLError(grid.dt, grid.dx)
    return grid
