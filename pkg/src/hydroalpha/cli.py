"""
Command-line entry point: ``hydroalpha {run, verify, norms, basis}``.

Exit statuses: 0 success (run completed, all checks passed), 1 usage or
input error (including failed checks for ``verify``), 2 run stopped at T*,
3 run diverged.  Every emitted file starts with a header naming the tool
version and the sha256 of the canonical configuration.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import RunConfig, config_hash, load_config, serialize_config
from .diagnostics import (
    MonitorObserver,
    default_R_weight,
    run_summary,
    smallness_check,
    write_monitor_csv,
    write_summary_json,
)
from .errors import ConfigError, NumericError, ParameterError, PreconditionError
from .field import Field, create_grid, read_snapshot, write_snapshot
from .littlewood_paley import besov_norm, build_profile
from .solver import COMPLETED, DIVERGED, TSTAR_REACHED, init_state, nonlinear_work, run
from .verify import SUITES, format_checks, run_suite
from .zbasis import build_basis

__all__ = ["main", "build_parser", "initial_field", "execute_run", "EXIT_CODES"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TSTAR = 2
EXIT_DIVERGED = 3
EXIT_CODES = {COMPLETED: EXIT_OK, TSTAR_REACHED: EXIT_TSTAR, DIVERGED: EXIT_DIVERGED}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _header(cfg: RunConfig | None) -> dict:
    head = {"tool": f"hydroalpha {__version__}"}
    head["config_sha256"] = config_hash(cfg) if cfg is not None else "none"
    return head


def _header_text(cfg: RunConfig | None) -> str:
    return " ".join(f"{k}={v}" if k != "tool" else v for k, v in _header(cfg).items())


def initial_field(cfg: RunConfig, grid, basis) -> Field:
    """u0 from the init block: a snapshot file, or Re(A e^{i kx x}) e~_k sums."""
    if cfg.init.file is not None:
        u0 = read_snapshot(cfg.init.file)
        if not u0.grid.same_as(grid):
            raise ConfigError(
                f"init.file grid (Nx={u0.grid.Nx}, Nz={u0.grid.Nz}, Lx={u0.grid.Lx}) "
                f"differs from the configured grid"
            )
        return Field(grid, u0.coeffs)
    c = np.zeros((grid.Nx, grid.Nz), dtype=complex)
    for kx, k, re, im in cfg.init.modes:
        A = complex(re, im)
        prof = basis.e_tilde[k - 1]
        if kx == 0:
            c[0] += A.real * prof
        else:
            c[kx % grid.Nx] += 0.5 * A * prof
            c[-kx % grid.Nx] += 0.5 * A.conjugate() * prof
    return Field(grid, c)


def _forcing(cfg: RunConfig, grid):
    if cfg.flags.forcing_file is None:
        return None
    f = read_snapshot(cfg.flags.forcing_file)
    if not f.grid.same_as(grid):
        raise ConfigError("flags.forcing_file grid differs from the configured grid")
    f = Field(grid, f.coeffs)
    return lambda t: f


class _Strided:
    """Call ``fn`` on the initial state, every ``stride``-th step and the last one."""

    def __init__(self, fn, stride: int):
        self.fn = fn
        self.stride = stride

    def __call__(self, state):
        if state.steps % self.stride == 0 or state.status != "running":
            self.fn(state)


def execute_run(cfg: RunConfig, out_dir=None) -> tuple[int, dict]:
    """Run a configuration and write its outputs; returns (exit status, summary)."""
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    header = _header(cfg)
    htext = _header_text(cfg)
    params = cfg.model_params()
    grid = create_grid(cfg.grid.Nx, cfg.grid.Nz, cfg.grid.Lx)
    basis = build_basis(grid, params.n_modes, params.alpha1)
    u0 = initial_field(cfg, grid, basis)
    small = smallness_check(u0, params)
    state = init_state(grid, basis, params, u0, disable_nonlinear=cfg.flags.disable_nonlinear,
                       forcing=_forcing(cfg, grid))
    R = params.R_weight if params.R_weight is not None else default_R_weight(
        params, basis.lambdas[0])

    monitor = MonitorObserver(params, R, small.ratio)
    observers = [_Strided(monitor, cfg.time.monitor_stride)]
    formats = set(cfg.output.formats)
    if "snapshots" in formats:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)

        def write(state):
            write_snapshot(snap_dir / f"u_{state.steps:07d}.txt", state.field(), htext)

        observers.append(_Strided(write, cfg.time.snapshot_stride))

    traj, final = run(state, cfg.time.T_final, cfg.time.dt, observers,
                      snapshot_stride=cfg.time.monitor_stride)
    summary = run_summary(traj, final, params, state.lam, R, small, basis=basis,
                          work=nonlinear_work(final))
    summary["forced"] = cfg.flags.forcing_file is not None
    summary["disable_nonlinear"] = cfg.flags.disable_nonlinear
    summary["horizon_note"] = "time norms are taken over [0, T_final] instead of [0, inf)"

    (out / "config.toml").write_text(f"# {htext}\n" + serialize_config(cfg))
    if "csv" in formats:
        write_monitor_csv(out / "monitors.csv", monitor.report, header)
    if "json" in formats:
        write_summary_json(out / "summary.json", summary, header)
    return EXIT_CODES.get(final.status, EXIT_DIVERGED), summary


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.with_overrides(dt=getattr(args, "dt", None), T_final=getattr(args, "T", None),
                              directory=getattr(args, "out", None))


def cmd_run(args) -> int:
    cfg = _load(args)
    code, summary = execute_run(cfg)
    line = f"status={summary['status']} t={summary['t_final']:.6g} steps={summary['steps']}"
    if summary["tstar"] is not None:
        line += f" tstar={summary['tstar']:.6g}"
    print(line)
    print(f"outputs written to {cfg.output.directory}")
    return code


def cmd_verify(args) -> int:
    checks = run_suite(args.suite)
    print(f"# hydroalpha {__version__} verify suite={args.suite}")
    print(format_checks(checks))
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_USAGE


def cmd_norms(args) -> int:
    path = Path(args.snapshot)
    if not path.is_file():
        raise UsageError(f"snapshot not found: {path}")
    f = read_snapshot(path)
    profile = build_profile(f.grid)
    s_list = args.s if args.s else [0.5, 1.5]
    records = [besov_norm(f, float(s), profile).to_json_dict() for s in s_list]
    print(json.dumps(records, indent=2))
    return EXIT_OK


def cmd_basis(args) -> int:
    cfg = _load(args)
    grid = create_grid(cfg.grid.Nx, cfg.grid.Nz, cfg.grid.Lx)
    basis = build_basis(grid, cfg.model.n_modes, cfg.model.alpha1)
    htext = _header_text(cfg)
    lines = [f"# {htext}", "k,lambda"]
    lines += [f"{k + 1},{lam!r}" for k, lam in enumerate(basis.lambdas.tolist())]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "basis.csv").write_text(text)
        cols = [f"# {htext}", f"# hydroalpha basis Nz={grid.Nz} n={basis.n} columns: z e_1..e_n"]
        for j, z in enumerate(grid.z_nodes):
            cols.append(" ".join(repr(float(v)) for v in [z, *basis.e_tilde[:, j]]))
        (out / "basis_functions.txt").write_text("\n".join(cols) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hydroalpha", description="Hydrostatic alpha-model solver and checks.")
    p.add_argument("--version", action="version", version=f"hydroalpha {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a configuration and write monitors and snapshots")
    r.add_argument("--config", help="TOML configuration (defaults if omitted)")
    r.add_argument("--out", help="output directory (overrides [output] directory)")
    r.add_argument("--dt", type=float, help="time step (overrides [time] dt)")
    r.add_argument("--T", type=float, help="final time (overrides [time] T_final)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run a named check suite")
    v.add_argument("--suite", default="all", choices=[*SUITES, "all"])
    v.set_defaults(func=cmd_verify)

    n = sub.add_parser("norms", help="Besov norms of a snapshot as JSON")
    n.add_argument("snapshot", help="snapshot file")
    n.add_argument("--s", type=float, action="append", help="regularity index (repeatable)")
    n.set_defaults(func=cmd_norms)

    b = sub.add_parser("basis", help="print k, lambda_k; with --out also write the profiles")
    b.add_argument("--config", help="TOML configuration (defaults if omitted)")
    b.add_argument("--out", help="directory for basis.csv and basis_functions.txt")
    b.set_defaults(func=cmd_basis)
    return p


def _thread_limit():
    raw = os.environ.get("HYDROALPHA_THREADS")
    if raw is None or raw == "":
        return contextlib.nullcontext()
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise UsageError(f"HYDROALPHA_THREADS must be a positive integer, got {raw!r}")
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except (UsageError, ConfigError, ParameterError, PreconditionError) as exc:
        print(f"hydroalpha: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"hydroalpha: numerical failure: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
