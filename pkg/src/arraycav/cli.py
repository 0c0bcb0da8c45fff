"""Command-line front end: ``arraycav <subcommand> ...``.

Exit codes: 0 success, 2 usage or validation error, 3 numeric capacity
exceeded, 1 any other numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import __version__, analytics, output
from .model import CavitySpec, ConfigError, SimulationConfig, load_config, square_config, validate_config
from .scattering import GridError, SolverError, detuning_scan, extract_resonance
from .sweeps import CapacityError, inefficiency_curve, refine_near_resonances, spacing_sweep, waist_sweep


class UsageError(Exception):
    pass


def _default_config() -> SimulationConfig:
    # 20x20 array, w = 15 lambda, x-polarized: the spacing-scan reference setup
    return square_config(1.2, 20, 15.0)


def _base_config(args) -> SimulationConfig:
    config = load_config(args.config) if args.config else _default_config()
    if getattr(args, "n", None) is not None:
        config = replace(config, lattice=replace(config.lattice, nx=args.n, ny=args.n))
    if getattr(args, "waist", None) is not None:
        config = replace(config, beam=replace(config.beam, waist_w=args.waist))
    if getattr(args, "spacing", None) is not None:
        config = replace(config, lattice=replace(config.lattice, spacing_a=args.spacing))
    if getattr(args, "finesse", None) is not None:
        config = replace(config, cavity=CavitySpec(args.finesse))
    return validate_config(config)


def _grid(lo, hi, steps, name):
    if lo is None or hi is None:
        raise UsageError(f"--{name}-min and --{name}-max are required")
    if steps < 1 or not hi >= lo or (steps > 1 and hi == lo):
        raise UsageError(f"invalid {name} range [{lo}, {hi}] with {steps} steps")
    return np.linspace(lo, hi, steps)


def _emit(text: str, dest: str | None):
    if dest in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _emit_table(table, args):
    if args.format == "json":
        _emit(output.sweep_json(table), args.out)
    else:
        _emit(output.sweep_csv(table, comment=not args.no_comment), args.out)


def cmd_point(args):
    config = _base_config(args)
    rates = analytics.system_rates(config)
    summary = None
    if args.numeric:
        summary = extract_resonance(detuning_scan(config, method="auto"))
    regime = "cavity" if config.has_cavity else "free"
    _emit(output.point_report_json(regime, rates, summary), args.out)


def _spacing_grid(args):
    grid = _grid(args.a_min, args.a_max, args.steps, "a")
    if not args.no_refine:
        grid = refine_near_resonances(grid, args.a_max, include_exact=not args.numeric)
        grid = grid[grid <= args.a_max]
    return grid


def cmd_scan_spacing(args):
    table = spacing_sweep(_base_config(args), _spacing_grid(args), numeric=args.numeric,
                          threads=args.threads)
    _emit_table(table, args)


def cmd_inefficiency(args):
    config = _base_config(args)
    if not config.has_cavity:
        raise UsageError("inefficiency needs a cavity: pass --finesse or a config with a cavity")
    table = inefficiency_curve(config, _spacing_grid(args), numeric=args.numeric, threads=args.threads)
    _emit_table(table, args)


def cmd_scan_waist(args):
    grid = _grid(args.w_min, args.w_max, args.steps, "w")
    table = waist_sweep(_base_config(args), grid, numeric=args.numeric, threads=args.threads)
    _emit_table(table, args)


def cmd_scan_detuning(args):
    config = _base_config(args)
    deltas = None
    if args.delta_min is not None or args.delta_max is not None:
        deltas = _grid(args.delta_min, args.delta_max, args.steps, "delta")
    spec = detuning_scan(config, deltas=deltas)
    if args.format == "json":
        _emit(output.spectrum_json(spec), args.out)
    else:
        _emit(output.spectrum_csv(spec, comment=not args.no_comment), args.out)


def cmd_resonances(args):
    if not args.max >= 1:
        raise UsageError("--max must be ≥ 1")
    _emit(output.resonance_list(analytics.resonance_spacings(args.max)), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arraycav",
        description="Cooperativity of atomic arrays coupled to a Gaussian mode, in free space or a cavity. "
                    "Lengths in wavelengths, rates in single-atom decay rates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", help="output file (default: stdout)")
    out.add_argument("--format", choices=("csv", "json"), default="csv")
    out.add_argument("--no-comment", action="store_true", help="omit the leading '#' units line")

    cfg = argparse.ArgumentParser(add_help=False)
    cfg.add_argument("--config", help="JSON config (default: 20x20 array, a=1.2, w=15, x-polarized)")
    cfg.add_argument("--n", type=int, help="atoms per side (overrides config)")
    cfg.add_argument("--waist", type=float, help="beam waist (overrides config)")
    cfg.add_argument("--finesse", type=float, help="cavity finesse (overrides config)")
    cfg.add_argument("--threads", type=int, help="worker threads (env ARRAYCAV_THREADS)")

    p = sub.add_parser("point", parents=[cfg], help="rate breakdown for one configuration")
    p.add_argument("config_path", nargs="?", help="JSON config (same as --config)")
    p.add_argument("--spacing", type=float, help="lattice spacing (overrides config)")
    p.add_argument("--numeric", action="store_true", help="add the coupled-dipole resonance summary")
    p.add_argument("--out")
    p.set_defaults(func=cmd_point)

    def spacing_args(sp):
        sp.add_argument("--a-min", type=float)
        sp.add_argument("--a-max", type=float)
        sp.add_argument("--steps", type=int, default=60)
        sp.add_argument("--numeric", action="store_true")
        sp.add_argument("--no-refine", action="store_true", help="skip points added below resonances")

    p = sub.add_parser("scan-spacing", parents=[cfg, out], help="cooperativity versus lattice spacing")
    spacing_args(p)
    p.set_defaults(func=cmd_scan_spacing)

    p = sub.add_parser("inefficiency", parents=[cfg, out], help="cavity inefficiency versus lattice spacing")
    spacing_args(p)
    p.set_defaults(func=cmd_inefficiency)

    p = sub.add_parser("scan-waist", parents=[cfg, out], help="cooperativity versus beam waist")
    p.add_argument("--spacing", type=float, help="lattice spacing (overrides config)")
    p.add_argument("--w-min", type=float)
    p.add_argument("--w-max", type=float)
    p.add_argument("--steps", type=int, default=24)
    p.add_argument("--numeric", action="store_true")
    p.set_defaults(func=cmd_scan_waist)

    p = sub.add_parser("scan-detuning", parents=[cfg, out], help="reflection spectrum r(delta)")
    p.add_argument("--spacing", type=float, help="lattice spacing (overrides config)")
    p.add_argument("--delta-min", type=float)
    p.add_argument("--delta-max", type=float)
    p.add_argument("--steps", type=int, default=81)
    p.set_defaults(func=cmd_scan_detuning)

    p = sub.add_parser("resonances", help="lattice spacings where new diffraction orders open")
    p.add_argument("--max", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_resonances)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config_path", None):
        if args.config:
            parser.error("give the config either positionally or with --config, not both")
        args.config = args.config_path
    try:
        args.func(args)
    except (UsageError, ConfigError, ValueError, TypeError) as exc:
        print(f"arraycav: error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"arraycav: error: {exc}", file=sys.stderr)
        return 3
    except (GridError, SolverError) as exc:
        print(f"arraycav: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"arraycav: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
