"""Square-integrable Levy drivers and their sampled increments.

A driver ``L`` is reported through its mean rate ``m = E[L(1)]`` and variance
rate ``C1 = Var[L(1)]``.  Compensated drivers are sampled as ``M = L - m t`` so
that every increment stream fed to the scheme is a martingale increment; the
drift ``m`` is handed back to the model and re-enters through the drift term.

Random streams are derived from a root seed and a (label, index) pair through
:class:`numpy.random.SeedSequence`, so FD runs and oracle runs can share the
exact same increments.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Brownian",
    "InverseGaussian",
    "CompoundPoisson",
    "IncrementStream",
    "stream_rng",
    "sample_increments",
    "sample_increment_matrix",
    "moments",
    "inverse_gaussian_variates",
]

LEVY = "levy"
SUBORDINATOR = "subordinator"


def stream_rng(seed: int, stream: str, index: int = 0) -> np.random.Generator:
    """Independent generator for the named stream of path ``index`` under root ``seed``."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    label = zlib.crc32(stream.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(label, int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def inverse_gaussian_variates(rng: np.random.Generator, mean: float, shape: float, size):
    """Exact IG(mean, shape) variates by the Michael-Schucany-Haas transform.

    The smaller root of the quadratic is written as ``mean (r - w)/(r + w)``
    with ``w = mean * chi2_1`` and ``r = sqrt(w (4 shape + w))`` to avoid
    cancellation; it is kept with probability ``mean / (mean + x)``, otherwise
    the conjugate root ``mean^2 / x`` is returned.
    """
    nu = rng.standard_normal(size)
    w = mean * nu * nu
    root = np.sqrt(w * (4.0 * shape + w))
    with np.errstate(invalid="ignore", divide="ignore"):
        x = np.where(w > 0.0, mean * (root - w) / (root + w), mean)
    x = np.maximum(x, np.finfo(float).tiny)
    accept = rng.random(size) <= mean / (mean + x)
    return np.where(accept, x, mean * mean / x)


@dataclass(frozen=True)
class Brownian:
    """Brownian motion with variance ``variance_rate`` per unit time."""

    variance_rate: float = 1.0

    def __post_init__(self):
        if not self.variance_rate > 0.0:
            raise ValueError(f"Brownian: variance_rate must be > 0, got {self.variance_rate}")

    compensated = True
    mean_rate = 0.0

    def _sample(self, rng, dt, size):
        return math.sqrt(self.variance_rate * dt) * rng.standard_normal(size)


@dataclass(frozen=True)
class InverseGaussian:
    """Inverse Gaussian process: ``L(t) ~ IG(delta t, gamma)``, mean ``delta/gamma`` per unit time."""

    delta: float
    gamma: float
    compensated: bool = True

    def __post_init__(self):
        if not self.delta > 0.0:
            raise ValueError(f"InverseGaussian: delta must be > 0, got {self.delta}")
        if not self.gamma > 0.0:
            raise ValueError(f"InverseGaussian: gamma must be > 0, got {self.gamma}")

    @property
    def raw_mean_rate(self):
        return self.delta / self.gamma

    @property
    def mean_rate(self):
        return 0.0 if self.compensated else self.raw_mean_rate

    @property
    def variance_rate(self):
        return self.delta / self.gamma**3

    def _sample(self, rng, dt, size):
        # IG(delta dt, gamma) is Wald with mean delta dt / gamma and shape (delta dt)^2
        return inverse_gaussian_variates(rng, self.delta * dt / self.gamma, (self.delta * dt) ** 2, size)


@dataclass(frozen=True)
class CompoundPoisson:
    """Compound Poisson process with intensity ``intensity`` and jumps of given first two moments.

    Jumps are Gamma distributed with the matching mean and variance when
    ``jump_mean > 0`` (degenerate at ``jump_mean`` if the variance is zero),
    and Normal otherwise.  Positive jumps make the process a subordinator.
    """

    intensity: float
    jump_mean: float
    jump_second_moment: float
    compensated: bool = True

    def __post_init__(self):
        if not self.intensity >= 0.0:
            raise ValueError(f"CompoundPoisson: intensity must be >= 0, got {self.intensity}")
        if self.jump_second_moment < self.jump_mean**2:
            raise ValueError("CompoundPoisson: jump_second_moment must be >= jump_mean**2")

    @property
    def jump_variance(self):
        return self.jump_second_moment - self.jump_mean**2

    @property
    def raw_mean_rate(self):
        return self.intensity * self.jump_mean

    @property
    def mean_rate(self):
        return 0.0 if self.compensated else self.raw_mean_rate

    @property
    def variance_rate(self):
        return self.intensity * self.jump_second_moment

    @property
    def positive_jumps(self):
        return self.jump_mean > 0.0

    def _sample(self, rng, dt, size):
        counts = rng.poisson(self.intensity * dt, size)
        var = self.jump_variance
        if self.jump_mean > 0.0:
            if var == 0.0:
                return counts * self.jump_mean
            shape = self.jump_mean**2 / var
            scale = var / self.jump_mean
            # a sum of n iid Gamma(k, s) jumps is Gamma(n k, s)
            safe = np.where(counts > 0, counts * shape, 1.0)
            return np.where(counts > 0, rng.gamma(safe, scale), 0.0)
        return counts * self.jump_mean + np.sqrt(counts * var) * rng.standard_normal(size)


def moments(driver) -> tuple[float, float]:
    """``(m, C1)``: mean rate of the (possibly compensated) driver and its variance rate."""
    return float(driver.mean_rate), float(driver.variance_rate)


def _raw_mean_rate(driver) -> float:
    return float(getattr(driver, "raw_mean_rate", driver.mean_rate))


@dataclass(frozen=True)
class IncrementStream:
    """Increments ``dM^0 .. dM^{N-1}`` over steps of length ``dt``."""

    dt: float
    values: np.ndarray = field(repr=False)
    seed: int
    stream: str = LEVY
    index: int = 0

    @property
    def n(self) -> int:
        return int(self.values.shape[-1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(f"# dt={self.dt!r} seed={self.seed} stream={self.stream} index={self.index}\n")
            for v in self.values:
                fh.write(f"{v:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "IncrementStream":
        meta = {}
        values = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for item in line[1:].split():
                        key, _, val = item.partition("=")
                        meta[key] = val
                    continue
                values.append(float(line))
        return cls(
            dt=float(meta["dt"]),
            values=np.asarray(values, dtype=float),
            seed=int(meta.get("seed", 0)),
            stream=meta.get("stream", LEVY),
            index=int(meta.get("index", 0)),
        )

    def to_bytes(self) -> bytes:
        """Little-endian float64 increments with no header."""
        return np.asarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, dt: float, seed: int = 0, stream: str = LEVY, index: int = 0):
        return cls(dt=dt, values=np.frombuffer(data, dtype="<f8").astype(float), seed=seed,
                   stream=stream, index=index)


def _raw_increments(driver, dt, n, seed, stream, index):
    rng = stream_rng(seed, stream, index)
    return np.asarray(driver._sample(rng, dt, n), dtype=float)


def sample_increments(driver, dt: float, n: int, seed: int, stream: str = LEVY,
                      index: int = 0, compensate: bool | None = None) -> IncrementStream:
    """Sample ``n`` i.i.d. increments of the driver over steps of length ``dt``.

    Increments of compensated drivers (``driver.compensated``) have the
    expected drift ``raw_mean_rate * dt`` removed; pass ``compensate`` to
    override, e.g. ``False`` for the raw subordinator path of a volatility.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if int(n) != n or n < 1:
        raise ValueError(f"increment count must be a positive integer, got {n}")
    values = _raw_increments(driver, dt, int(n), seed, stream, index)
    if compensate is None:
        compensate = driver.compensated
    if compensate:
        values = values - _raw_mean_rate(driver) * dt
    return IncrementStream(dt=dt, values=values, seed=seed, stream=stream, index=index)


def sample_increment_matrix(driver, dt: float, n: int, seed: int, paths: int,
                            stream: str = LEVY, first_index: int = 0,
                            compensate: bool | None = None) -> np.ndarray:
    """``(paths, n)`` array whose row ``i`` equals the stream of path ``first_index + i``."""
    rows = [
        sample_increments(driver, dt, n, seed, stream, first_index + i, compensate).values
        for i in range(paths)
    ]
    return np.vstack(rows) if rows else np.empty((0, n))
