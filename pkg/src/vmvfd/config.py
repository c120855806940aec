"""Run configuration: flat ``key = value`` text with dotted section prefixes.

Grammar (one statement per line)::

    line    := blank | comment | key "=" value [comment]
    comment := "#" anything
    key     := name ("." name)*

Keys are case-sensitive, each key may appear once, and unknown keys are
rejected.  Values are numbers, ``true``/``false``, or bare words.  See
:data:`DEFAULT_CONFIG` for every recognised key.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field

from . import kernels as K
from .drivers import Brownian, CompoundPoisson, InverseGaussian
from .grid import GridSpec, validate_grid
from .scheme import BOUNDARY_MODES, HSPDEModel
from .volatility import Deterministic, OUSubordinator

__all__ = ["ConfigError", "RunConfig", "DEFAULT_CONFIG", "parse_config", "load_config", "OUTPUTS"]

OUTPUTS = ("boundary", "field", "field_bin", "moments", "budget", "paths")

DEFAULT_CONFIG = """\
# Bjerksund blend kernel with an inverse-Gaussian OU volatility
model.mu = 0
model.boundary = extended_triangle
model.kernel.g.type = bjerksund
model.kernel.g.a = 1
model.kernel.g.b = 1
model.kernel.g.alpha = 0.01
model.kernel.p.type = zero
model.drift.value = 0
model.volatility.type = ou_subordinator
model.volatility.rate = 0.01
model.volatility.subordinator.type = inverse_gaussian
model.volatility.subordinator.delta = 15
model.volatility.subordinator.gamma = 1
model.driver.type = brownian
model.driver.variance_rate = 1

grid.t0 = 0
grid.dt = 0.01
grid.n = 100
grid.dx = 0.01
grid.j = 200

run.seed = 20240101
run.paths = 1
run.outputs = boundary,field,moments,budget
run.out = out
"""

_KERNEL_PARAMS = {
    "zero": (),
    "constant": ("c",),
    "exponential": ("alpha",),
    "bjerksund": ("a", "b", "alpha"),
    "power_fbm": ("hurst",),
    "regularized_fbm": ("hurst", "eps"),
}
_DRIVER_PARAMS = {
    "brownian": ("variance_rate",),
    "inverse_gaussian": ("delta", "gamma", "compensated"),
    "compound_poisson": ("intensity", "jump_mean", "jump_second_moment", "compensated"),
}
_VOL_PARAMS = {
    "constant": ("value",),
    "ou_subordinator": ("rate", "burn_in_tol", "max_burn_in_steps"),
}

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; ``line`` is 1-based or ``None``."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class RunConfig:
    model: HSPDEModel
    grid: GridSpec
    seed: int
    paths: int
    outputs: tuple
    out_dir: str
    entries: tuple = field(repr=False, default=())

    @property
    def canonical_text(self) -> str:
        """Sorted ``key = value`` lines; what the config hash covers."""
        return "".join(f"{k} = {v}\n" for k, v in sorted(self.entries))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text.encode()).hexdigest()

    def with_overrides(self, **overrides) -> "RunConfig":
        """Re-parse with some keys replaced (e.g. ``{"run.seed": "7"}``) so entries stay in sync."""
        text = "".join(f"{k} = {v}\n" for k, v in self.entries)
        return parse_config(text, overrides=overrides)


def _split_lines(text: str):
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not _KEY_RE.match(key):
            raise ConfigError(f"malformed key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key}", lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key} (first set on line {entries[key][1]})", lineno)
        entries[key] = (value, lineno)
    return entries


class _Reader:
    """Typed access to parsed entries that remembers which keys were consumed."""

    def __init__(self, entries):
        self.entries = entries
        self.used: set[str] = set()

    def line(self, key):
        return self.entries.get(key, (None, None))[1]

    def has(self, key):
        return key in self.entries

    def raw(self, key, default=None):
        if key not in self.entries:
            if default is None:
                raise ConfigError(f"missing required key {key}")
            return default
        self.used.add(key)
        return self.entries[key][0]

    def number(self, key, default=None):
        value = self.raw(key, None if default is None else str(default))
        try:
            out = float(value)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {value!r}", self.line(key)) from None
        if not math.isfinite(out):
            raise ConfigError(f"{key}: must be finite", self.line(key))
        return out

    def integer(self, key, default=None):
        value = self.raw(key, None if default is None else str(default))
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {value!r}", self.line(key)) from None

    def boolean(self, key, default):
        value = self.raw(key, "true" if default else "false").lower()
        if value not in ("true", "false"):
            raise ConfigError(f"{key}: expected true or false, got {value!r}", self.line(key))
        return value == "true"

    def choice(self, key, options, default=None):
        value = self.raw(key, default)
        if value not in options:
            raise ConfigError(f"{key}: expected one of {', '.join(options)}, got {value!r}", self.line(key))
        return value


def _build(key, line, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}", line) from None


def _kernel(r: _Reader, prefix: str):
    kind = r.choice(prefix + ".type", tuple(_KERNEL_PARAMS), "zero")
    line = r.line(prefix + ".type")
    params = {name: r.number(f"{prefix}.{name}") for name in _KERNEL_PARAMS[kind]}
    classes = {"zero": K.Zero, "constant": K.Constant, "exponential": K.Exponential,
               "bjerksund": K.BjerksundBlend, "power_fbm": K.PowerFBm,
               "regularized_fbm": K.RegularizedFBm}
    kernel = _build(prefix, line, classes[kind], **params)
    if r.has(prefix + ".shift"):
        kernel = _build(prefix, r.line(prefix + ".shift"), K.Shifted, kernel, r.number(prefix + ".shift"))
    if r.has(prefix + ".support"):
        kernel = _build(prefix, r.line(prefix + ".support"), K.Truncated, kernel,
                        r.number(prefix + ".support"))
    return kernel


def _driver(r: _Reader, prefix: str, default_kind: str, compensated_default: bool):
    kind = r.choice(prefix + ".type", tuple(_DRIVER_PARAMS), default_kind)
    line = r.line(prefix + ".type")
    if kind == "brownian":
        return _build(prefix, line, Brownian, r.number(prefix + ".variance_rate", 1.0))
    comp = r.boolean(prefix + ".compensated", compensated_default)
    if kind == "inverse_gaussian":
        return _build(prefix, line, InverseGaussian, r.number(prefix + ".delta"),
                      r.number(prefix + ".gamma"), compensated=comp)
    return _build(prefix, line, CompoundPoisson, r.number(prefix + ".intensity"),
                  r.number(prefix + ".jump_mean"), r.number(prefix + ".jump_second_moment"),
                  compensated=comp)


def _volatility(r: _Reader):
    prefix = "model.volatility"
    kind = r.choice(prefix + ".type", tuple(_VOL_PARAMS), "constant")
    line = r.line(prefix + ".type")
    if kind == "constant":
        value = r.number(prefix + ".value", 1.0)
        if value < 0.0:
            raise ConfigError(f"{prefix}.value: volatility must be nonnegative", r.line(prefix + ".value"))
        return Deterministic(value)
    sub_prefix = prefix + ".subordinator"
    if r.has(sub_prefix + ".type") and r.entries[sub_prefix + ".type"][0] == "brownian":
        raise ConfigError("the subordinator must be inverse_gaussian or compound_poisson",
                          r.line(sub_prefix + ".type"))
    sub = _driver(r, sub_prefix, "inverse_gaussian", compensated_default=False)
    return _build(prefix, line, OUSubordinator, r.number(prefix + ".rate"), sub,
                  burn_in_tol=r.number(prefix + ".burn_in_tol", 1e-6),
                  max_burn_in_steps=r.integer(prefix + ".max_burn_in_steps", 1000))


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse config text; ``overrides`` replaces or adds keys after parsing.

    Raises :class:`ConfigError` for syntax and value problems and
    :class:`~vmvfd.errors.CFLError` when ``grid.dt > grid.dx``.
    """
    entries = _split_lines(text)
    for key, value in (overrides or {}).items():
        entries[key] = (str(value), None)  # overrides have no source line
    r = _Reader(entries)

    mode = r.choice("model.boundary", BOUNDARY_MODES, "extended_triangle")
    drift = Deterministic(r.number("model.drift.value", 0.0))
    model = _build("model", None, HSPDEModel,
                   mu=r.number("model.mu", 0.0),
                   drift_kernel=_kernel(r, "model.kernel.p"),
                   vol_kernel=_kernel(r, "model.kernel.g"),
                   drift=drift,
                   volatility=_volatility(r),
                   driver=_driver(r, "model.driver", "brownian", compensated_default=True),
                   boundary_mode=mode,
                   zero_boundary_tol=r.number("model.zero_boundary_tol", 1e-3))

    t0, dt, dx = r.number("grid.t0", 0.0), r.number("grid.dt"), r.number("grid.dx")
    n, j = r.integer("grid.n"), r.integer("grid.j", 0)
    for key, ok in (("grid.dt", dt > 0), ("grid.dx", dx > 0), ("grid.n", n >= 1), ("grid.j", j >= 0)):
        if not ok:
            raise ConfigError(f"{key}: out of range", r.line(key))
    grid = GridSpec(t0, dt, n, dx, j)
    validate_grid(grid)

    seed = r.integer("run.seed", 0)
    if seed < 0 or seed >= 2**64:
        raise ConfigError("run.seed must lie in [0, 2^64)", r.line("run.seed"))
    paths = r.integer("run.paths", 1)
    if paths < 1:
        raise ConfigError(f"run.paths must be >= 1, got {paths}", r.line("run.paths"))
    outputs = tuple(s.strip() for s in r.raw("run.outputs", "boundary").split(",") if s.strip())
    for name in outputs:
        if name not in OUTPUTS:
            raise ConfigError(f"run.outputs: unknown output {name!r} (known: {', '.join(OUTPUTS)})",
                              r.line("run.outputs"))
    out_dir = r.raw("run.out", "out")

    unknown = sorted(set(entries) - r.used, key=lambda k: (entries[k][1] or 0, k))
    if unknown:
        key = unknown[0]
        raise ConfigError(f"unknown or unused key {key}", entries[key][1])
    canonical = tuple((k, v) for k, (v, _) in entries.items())
    return RunConfig(model=model, grid=grid, seed=seed, paths=paths, outputs=outputs,
                     out_dir=out_dir, entries=canonical)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Parse the file at ``path``, or :data:`DEFAULT_CONFIG` when ``path`` is ``None``."""
    if path is None:
        return parse_config(DEFAULT_CONFIG, overrides)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, overrides)
