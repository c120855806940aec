"""Command-line front end: ``vmvfd {simulate,benchmark,validate,fbm}``.

Exit codes: 0 ok, 1 validation failure, 2 config error, 3 CFL violation.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from . import io
from . import kernels as K
from .benchmark import run_benchmark
from .config import ConfigError, RunConfig, load_config
from .drivers import LEVY, SUBORDINATOR, Brownian
from .errors import CFLError, NonLipschitzError, SingularityError, UnsupportedError
from .grid import GridSpec
from .oracle import error_budget, moments_formula
from .scheme import HSPDEModel, sample_inputs, simulate_boundaries, solve_batch
from .validation import run_all
from .volatility import BURN_IN, Deterministic, OUSubordinator, PathPair

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_CFL = 0, 1, 2, 3
VALIDATE_PATHS = 2000


class _Reporter:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, text: str) -> None:
        if not self.quiet:
            print(text)


def _load(args) -> RunConfig:
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.paths is not None:
        overrides["run.paths"] = args.paths
    if args.out is not None:
        overrides["run.out"] = args.out
    return load_config(args.config, overrides)


def _streams(model: HSPDEModel) -> str:
    names = [LEVY]
    if isinstance(model.volatility, OUSubordinator):
        names += [SUBORDINATOR, BURN_IN]
    return ", ".join(names)


def _grid_text(grid: GridSpec) -> str:
    return (f"t0={io.fmt(grid.t0)} dt={io.fmt(grid.dt)} n={grid.n_steps} "
            f"dx={io.fmt(grid.dx)} j={grid.n_space} lambda={io.fmt(grid.lam)}")


def _manifest(cfg: RunConfig, command: str, paths: int, extra=()) -> list:
    items = [
        ("command", command),
        ("version", __version__),
        ("config_hash", "sha256:" + cfg.config_hash),
        ("seed", cfg.seed),
        ("streams", _streams(cfg.model)),
        ("path_indices", f"0..{paths - 1}"),
        ("grid", _grid_text(cfg.grid)),
        ("boundary_mode", cfg.model.boundary_mode),
    ]
    items += list(extra)
    items += [(f"config.{k}", v) for k, v in sorted(cfg.entries)]
    return items


def _moment_rows(cfg: RunConfig, boundaries):
    grid, model = cfg.grid, cfg.model
    times = grid.times()
    header, cols, notes = ["t"], [times], []
    try:
        formula = np.array([moments_formula(model, t, grid.t0) for t in times])
        header += ["formula_mean", "formula_second_moment"]
        cols += [formula[:, 0], formula[:, 1]]
    except UnsupportedError as exc:
        notes.append(f"formula unavailable: {exc}")
    if boundaries.shape[0] > 1:
        sq = boundaries**2
        header += ["mc_mean", "mc_second_moment", "mc_second_moment_se"]
        cols += [boundaries.mean(axis=0), sq.mean(axis=0),
                 sq.std(axis=0, ddof=1) / np.sqrt(boundaries.shape[0])]
    else:
        notes.append("Monte Carlo moments need paths > 1")
    if len(header) == 1:
        return None, notes
    return (header, [tuple(float(c[i]) for c in cols) for i in range(times.size)]), notes


def _budget_rows(cfg: RunConfig):
    grid = cfg.grid
    try:
        budgets = [error_budget(cfg.model, grid, n) for n in range(grid.n_steps + 1)]
    except (NonLipschitzError, UnsupportedError) as exc:
        return None, [f"budget unavailable: {exc}"]
    header = ["n", "t", "c1", "c2", "c3", "c4", "modulus_a", "modulus_sigma", "total"]
    rows = [(b.n, float(grid.t(b.n)), b.c1, b.c2, b.c3, b.c4, b.modulus_a, b.modulus_sigma, b.total)
            for b in budgets]
    return (header, rows), []


def cmd_simulate(cfg: RunConfig, say) -> int:
    model, grid = cfg.model, cfg.grid
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    files, notes = [], []

    # path 0 with its field, the rest boundary-only in vectorized chunks
    dM, a, s = sample_inputs(model, grid, cfg.seed, paths=1)
    keep_field = "field" in cfg.outputs or "field_bin" in cfg.outputs
    if keep_field:
        b0, values = solve_batch(model, grid, dM, a, s, retain=True)
    else:
        b0 = solve_batch(model, grid, dM, a, s)
    boundaries = b0
    if cfg.paths > 1:
        rest = simulate_boundaries(model, grid, cfg.seed, cfg.paths - 1, first_index=1)
        boundaries = np.vstack([b0, rest])

    times = grid.times()
    if "boundary" in cfg.outputs:
        io.write_boundary_csv(os.path.join(out, "boundary.csv"), times, boundaries)
        files.append("boundary.csv")
    if keep_field:
        rect = values[0, :, : grid.n_space + 1]
        if "field" in cfg.outputs:
            io.write_field_csv(os.path.join(out, "field.csv"), times, grid.xs(), rect)
            files.append("field.csv")
        if "field_bin" in cfg.outputs:
            io.write_field_binary(os.path.join(out, "field.bin"), rect, grid.dt, grid.dx)
            files.append("field.bin")
    if "paths" in cfg.outputs:
        PathPair(t=times, a=a[0], sigma=s[0], seed=cfg.seed).to_csv(os.path.join(out, "paths.csv"))
        files.append("paths.csv")
    if "moments" in cfg.outputs:
        table, extra = _moment_rows(cfg, boundaries)
        notes += extra
        if table is not None:
            io.write_table_csv(os.path.join(out, "moments.csv"), *table)
            files.append("moments.csv")
    if "budget" in cfg.outputs:
        table, extra = _budget_rows(cfg)
        notes += extra
        if table is not None:
            io.write_table_csv(os.path.join(out, "budget.csv"), *table)
            files.append("budget.csv")

    extra = [("paths", cfg.paths), ("files", ", ".join(files))]
    extra += [("note", n) for n in notes]
    io.write_key_values(os.path.join(out, "manifest.txt"), _manifest(cfg, "simulate", cfg.paths, extra))
    say(f"simulate: {cfg.paths} path(s), {grid.n_steps + 1} times, wrote {', '.join(files)} to {out}")
    for n in notes:
        say(f"note: {n}")
    return EXIT_OK


def cmd_benchmark(cfg: RunConfig, say, repeats: int = 5) -> int:
    lines = []
    full = run_benchmark(cfg.model, cfg.grid, cfg.seed, repeats=repeats)
    lines += full.lines("field")
    column = run_benchmark(cfg.model, replace(cfg.grid, n_space=0), cfg.seed, repeats=repeats)
    lines += column.lines("boundary_only")
    status = EXIT_OK
    for label, res in (("field", full), ("boundary_only", column)):
        if res.outputs_agree is False:
            lines.append(f"[{label}] FAIL: FD and re-integration disagree at dt == dx")
            status = EXIT_VALIDATION
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "benchmark.txt"), "w", newline="\n") as fh:
        fh.write("".join(line + "\n" for line in lines))
    for line in lines:
        say(line)
    return status


def cmd_validate(cfg: RunConfig, say, paths: int) -> int:
    results = run_all(cfg.model, cfg.grid, cfg.seed, paths=paths)
    lines = [r.line() for r in results]
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "validate.txt"), "w", newline="\n") as fh:
        fh.write("".join(line + "\n" for line in lines))
    for r in results:
        if r.table:
            io.write_table_csv(os.path.join(cfg.out_dir, f"{r.name}.csv"),
                               ["dt", "rmse", "mse", "mse_se", "budget"], r.table)
    for line in lines:
        say(line)
    return EXIT_OK if all(r.ok for r in results) else EXIT_VALIDATION


def cmd_fbm(cfg: RunConfig, say, hurst: float, eps: float) -> int:
    if not 0.0 < hurst < 1.0:
        raise ConfigError(f"--hurst must lie in (0, 1), got {hurst}")
    if not eps > 0.0:
        raise ConfigError(f"--eps must be > 0, got {eps}")
    grid = replace(cfg.grid, n_space=0)
    model = HSPDEModel(vol_kernel=K.RegularizedFBm(hurst, eps), volatility=Deterministic(1.0),
                       driver=Brownian(1.0))
    boundary = simulate_boundaries(model, grid, cfg.seed, 1)
    os.makedirs(cfg.out_dir, exist_ok=True)
    io.write_boundary_csv(os.path.join(cfg.out_dir, "fbm_path.csv"), grid.times(), boundary)
    bound = K.fbm_regularization_error(hurst, eps)
    value = K.fbm_regularization_error_exact(hurst, eps)
    fbm_cfg = replace(cfg, model=model, grid=grid)
    extra = [("hurst", io.fmt(hurst)), ("eps", io.fmt(eps)),
             ("regularization_bound", io.fmt(bound)),
             ("regularization_error_quadrature", io.fmt(value)),
             ("files", "fbm_path.csv")]
    io.write_key_values(os.path.join(cfg.out_dir, "manifest.txt"), _manifest(fbm_cfg, "fbm", 1, extra))
    say(f"fbm: H={hurst:g} eps={eps:g} bound={bound:.6g} quadrature={value:.6g}; "
        f"wrote fbm_path.csv to {cfg.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="config file (default: built-in example)")
    common.add_argument("--seed", type=int, help="root seed, overrides run.seed")
    common.add_argument("--out", metavar="DIR", help="output directory, overrides run.out")
    common.add_argument("--paths", type=int, help="number of paths, overrides run.paths")
    common.add_argument("--quiet", action="store_true", help="print nothing on success")

    parser = argparse.ArgumentParser(prog="vmvfd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="solve and write boundary/field CSVs")
    bench = sub.add_parser("benchmark", parents=[common], help="time FD against re-integration")
    bench.add_argument("--repeats", type=int, default=5, help="timed runs per method (>= 5)")
    sub.add_parser("validate", parents=[common], help="run the self-checks")
    fbm = sub.add_parser("fbm", parents=[common], help="simulate the regularized fBm approximation")
    fbm.add_argument("--hurst", type=float, required=True)
    fbm.add_argument("--eps", type=float, required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    say = _Reporter(args.quiet)
    try:
        cfg = _load(args)
        if args.command == "simulate":
            return cmd_simulate(cfg, say)
        if args.command == "benchmark":
            if args.repeats < 5:
                raise ConfigError(f"--repeats must be >= 5, got {args.repeats}")
            return cmd_benchmark(cfg, say, args.repeats)
        if args.command == "validate":
            return cmd_validate(cfg, say, args.paths if args.paths is not None else VALIDATE_PATHS)
        return cmd_fbm(cfg, say, args.hurst, args.eps)
    except CFLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CFL
    except (ConfigError, SingularityError, NonLipschitzError, UnsupportedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
