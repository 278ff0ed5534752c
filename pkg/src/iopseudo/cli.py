"""Command-line front end.

Every analysis is a subcommand writing CSV, SVG or ``key=value`` files to
``--out``. The ``platoon`` subcommand builds a vehicle string and hands it
to one of the other subcommands::

    iopseudo bounds --system example1 --eps 1
    iopseudo platoon --symmetry bidirectional --n 400 bounds --a 3

Exit codes: 0 success, 2 I/O failure, 3 numerical failure, 4 invalid
configuration.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys as _sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import formats
from .bounds import KreissSearch, compute_bounds
from .errors import DimensionMismatch, InvalidA, InvalidSpec, IOPseudoError
from .linalg import NormKind
from .oracle import HorizonConfig, transient_sup
from .pseudospectra import GridSpec, evaluate_grid, extract_level_curves, resolvent_norms
from .quadrature import QuadratureConfig
from .systems import (FullInitialCondition, Impulse, PlatoonSpec, StructuredInitialCondition,
                      build_platoon, example1, example2, is_platoon_file, load_platoon_spec,
                      load_system, scenario_matrices)

__all__ = ["main", "build_parser", "RunConfig", "EXIT_OK", "EXIT_IO", "EXIT_NUMERICAL",
           "EXIT_CONFIG"]

log = logging.getLogger("iopseudo")

EXIT_OK = 0
EXIT_IO = 2
EXIT_NUMERICAL = 3
EXIT_CONFIG = 4

COMMANDS = ("grid", "curves", "bode", "bounds", "oracle")
BUILTINS = {"example1": example1, "example2": example2}


class ConfigError(Exception):
    """Bad command-line arguments."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2, which is reserved for I/O failures here
    def error(self, message):
        raise ConfigError(message)


def _floats(text, count=None, name="value"):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r}") from None
    if count is not None and len(vals) != count:
        raise ConfigError(f"{name}: expected {count} comma-separated numbers, got {text!r}")
    return vals


def _resolution(text):
    parts = text.lower().split("x")
    try:
        nx, ny = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--res expects NxM, got {text!r}") from None
    if nx < 2 or ny < 2:
        raise ConfigError("--res needs at least 2 points per axis")
    return nx, ny


@dataclass
class RunConfig:
    """Everything a subcommand needs, resolved from the arguments."""

    command: str
    system: object
    label: str
    platoon: bool
    norm: NormKind
    scenario: str
    out: Path
    window: tuple | None = None
    resolution: tuple | None = None
    eps: tuple = ()
    a: object = "opt"
    tol: float = 1e-6
    horizon: float | None = None
    omega: tuple | None = None
    workers: int = 1


def _add_common(p):
    p.add_argument("--norm", choices=["1", "2", "inf"], default=None,
                   help="induced norm (default: inf for platoons, 2 otherwise)")
    p.add_argument("--scenario", default=None,
                   help="impulse, init or structured:<matrix file> "
                        "(default: init for platoons, impulse otherwise)")
    p.add_argument("--window", help="re0,re1,im0,im1 for grids and curves")
    p.add_argument("--res", help="grid resolution NxM (real x imaginary)")
    p.add_argument("--eps", help="comma-separated epsilon ladder")
    p.add_argument("--a", default="opt", help="semicircle radius factor or 'opt'")
    p.add_argument("--tol", type=float, default=1e-6, help="quadrature tolerance")
    p.add_argument("--horizon", type=float, help="oracle time horizon")
    p.add_argument("--omega", help="bode grid lo,hi,count")
    p.add_argument("--workers", type=int, default=1, help="threads for grid evaluation")
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iopseudo", description="Input-output pseudospectra and transient bounds.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--system", required=True,
                        help="example1, example2, a state-space file or a platoon file")
        _add_common(sp)
    pl = sub.add_parser("platoon", help="build a vehicle string and run a subcommand on it")
    pl.add_argument("--n", type=int, required=True)
    pl.add_argument("--symmetry", choices=["directed", "bidirectional", "custom"],
                    default="directed")
    pl.add_argument("--beta-p", type=float, default=1.0)
    pl.add_argument("--beta-d", type=float, default=1.0)
    pl.add_argument("--alpha", type=float, default=0.1)
    down = pl.add_subparsers(dest="downstream", required=True)
    for name in COMMANDS:
        _add_common(down.add_parser(name))
    return parser


def _platoon_label(spec: PlatoonSpec) -> str:
    return (f"platoon:{spec.symmetry}:n={spec.n}:beta_p={spec.beta_p!r}:"
            f"beta_d={spec.beta_d!r}:alpha={spec.alpha!r}")


def _load_source(name):
    """``(system, label, is_platoon)`` for a builtin name or a file."""
    if name in BUILTINS:
        return BUILTINS[name](), name, False
    path = Path(name)
    if is_platoon_file(path):
        spec = load_platoon_spec(path)
        return build_platoon(spec), _platoon_label(spec), True
    return load_system(path), path.name, False


def _scenario(text, platoon):
    if text is None:
        text = "init" if platoon else "impulse"
    if text == "impulse":
        return Impulse(), text
    if text == "init":
        return FullInitialCondition(), text
    if text.startswith("structured:"):
        path = text.split(":", 1)[1]
        B0 = np.loadtxt(path, ndmin=2)
        return StructuredInitialCondition(B0), f"structured:{Path(path).name}"
    raise ConfigError(f"unknown scenario {text!r}")


def resolve(args) -> RunConfig:
    if args.command == "platoon":
        spec = PlatoonSpec(args.n, args.symmetry, args.beta_p, args.beta_d, args.alpha)
        raw, label, platoon = build_platoon(spec), _platoon_label(spec), True
        command = args.downstream
    else:
        raw, label, platoon = _load_source(args.system)
        command = args.command
    scenario, scen_label = _scenario(args.scenario, platoon)
    system = scenario_matrices(raw, scenario)
    norm = NormKind.parse(args.norm or ("inf" if platoon else "2"))
    cfg = RunConfig(command, system, label, platoon, norm, scen_label, Path(args.out))
    if args.window:
        re0, re1, im0, im1 = _floats(args.window, 4, "--window")
        if not (re0 < re1 and im0 < im1):
            raise ConfigError("--window must be increasing in both directions")
        cfg.window = (re0, re1, im0, im1)
    if args.res:
        cfg.resolution = _resolution(args.res)
    if args.eps:
        cfg.eps = tuple(_floats(args.eps, name="--eps"))
        if any(e <= 0 for e in cfg.eps):
            raise ConfigError("--eps values must be positive")
    if args.a != "opt":
        (cfg.a,) = _floats(args.a, 1, "--a")
        if not cfg.a > 1:
            raise ConfigError("--a must exceed 1")
    if not args.tol > 0:
        raise ConfigError("--tol must be positive")
    cfg.tol = args.tol
    if args.horizon is not None:
        if not args.horizon > 0:
            raise ConfigError("--horizon must be positive")
        cfg.horizon = args.horizon
    if args.omega:
        lo, hi, count = _floats(args.omega, 3, "--omega")
        if not (0 < lo < hi) or count < 2:
            raise ConfigError("--omega needs 0 < lo < hi and at least 2 points")
        cfg.omega = (lo, hi, int(count))
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    cfg.workers = args.workers
    return cfg


def _grid_spec(cfg) -> GridSpec:
    spec = GridSpec(norm=cfg.norm)
    window = cfg.window or (*spec.re_range, *spec.im_range)
    res = cfg.resolution or spec.resolution
    return GridSpec(window[:2], window[2:], res, cfg.norm)


def _eigenvalues(system):
    try:
        return system.eigenvalues()
    except ValueError:
        log.info("eigenvalues skipped: system too large")
        return np.empty(0)


def _header(cfg) -> dict:
    return {"system": cfg.label, "scenario": cfg.scenario}


def run_grid(cfg) -> int:
    grid = evaluate_grid(cfg.system, _grid_spec(cfg), workers=cfg.workers)
    formats.write_grid_csv(grid, cfg.out / "grid.csv")
    print(f"grid: {grid.log10_values.size} points -> {cfg.out / 'grid.csv'}")
    return EXIT_OK


def _default_ladder(grid, k=6):
    finite = grid.log10_values[np.isfinite(grid.log10_values)]
    lo, hi = np.percentile(finite, [10, 90])
    # epsilon is the reciprocal of the resolvent level
    return tuple(float(10.0 ** -v) for v in np.linspace(hi, lo, k))


def run_curves(cfg) -> int:
    spec = _grid_spec(cfg)
    grid = evaluate_grid(cfg.system, spec, workers=cfg.workers)
    ladder = cfg.eps or _default_ladder(grid)
    curves = {}
    for eps in ladder:
        curves[eps] = extract_level_curves(grid, eps)
    formats.write_curves_csv(curves, cfg.out / "curves.csv")
    flat = [c for eps in sorted(curves) for c in curves[eps]]
    formats.write_svg(cfg.out / "curves.svg", flat, _eigenvalues(cfg.system),
                      window=(*spec.re_range, *spec.im_range))
    print(f"curves: {len(flat)} curves at {len(ladder)} levels -> {cfg.out / 'curves.csv'}")
    return EXIT_OK


def run_bode(cfg) -> int:
    lo, hi, count = cfg.omega or ((1e-12, 4.0, 2000) if cfg.platoon else (1e-3, 1e3, 2000))
    omega = np.logspace(math.log10(lo), math.log10(hi), count)
    amp = resolvent_norms(cfg.system, 1j * omega, cfg.norm)
    bad = ~np.isfinite(amp)
    for om in omega[bad]:
        log.error("singular evaluation at omega = %s, row skipped", formats.fmt(om))
    formats.write_bode_csv(omega[~bad], amp[~bad], cfg.out / "bode.csv")
    print(f"bode: {int((~bad).sum())} rows -> {cfg.out / 'bode.csv'}")
    return EXIT_NUMERICAL if bad.any() else EXIT_OK


def run_bounds(cfg) -> int:
    quad = QuadratureConfig(abs_tol=cfg.tol, rel_tol=cfg.tol)
    grid_spec = _grid_spec(cfg) if cfg.eps else None
    report = compute_bounds(cfg.system, cfg.norm, eps_ladder=cfg.eps or None, a=cfg.a,
                            quad=quad, search=KreissSearch(), grid_spec=grid_spec)
    header = _header(cfg)
    formats.write_report(report, cfg.out / "bounds.txt", header)
    formats.write_report_rows([(header, report)], cfg.out / "bounds.csv")
    _sys.stdout.write(formats.format_report(report, header))
    return EXIT_OK


def run_oracle(cfg) -> int:
    trace = transient_sup(cfg.system, cfg.norm, HorizonConfig(horizon=cfg.horizon),
                          strict=cfg.horizon is None)
    formats.write_trace_csv(trace, cfg.out / "trace.csv")
    lines = {"system": cfg.label, "scenario": cfg.scenario, "norm": cfg.norm.value,
             "sup_value": trace.sup_value, "sup_time": trace.sup_time,
             "converged": trace.converged}
    text = "".join(f"{k}={formats.fmt(v)}\n" for k, v in lines.items())
    (cfg.out / "oracle.txt").write_text(text)
    _sys.stdout.write(text)
    return EXIT_OK


RUNNERS = {"grid": run_grid, "curves": run_curves, "bode": run_bode,
           "bounds": run_bounds, "oracle": run_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"iopseudo: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = resolve(args)
        cfg.out.mkdir(parents=True, exist_ok=True)
        return RUNNERS[cfg.command](cfg)
    except (ConfigError, InvalidSpec, DimensionMismatch, InvalidA) as exc:
        print(f"iopseudo: invalid configuration: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"iopseudo: I/O error: {exc}", file=_sys.stderr)
        return EXIT_IO
    except IOPseudoError as exc:
        print(f"iopseudo: numerical failure ({type(exc).__name__}): {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"iopseudo: invalid configuration: {exc}", file=_sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
