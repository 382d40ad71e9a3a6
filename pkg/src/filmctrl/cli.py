"""Command-line interface.

Subcommands: gain, simulate, dispersion, min-actuators, preset. One config
file drives everything; ``--set key=value`` overrides individual file keys
(precedence: flags > file > defaults). The default config path can be set
with the FILMCTRL_CONFIG environment variable.

Exit codes: 0 ok, 1 usage/config error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from time import perf_counter

import numpy as np

from . import __version__
from .actuators import make_actuators
from .config import RunConfig, config_hash, load_config, parse_config, set_key, write_config
from .control import (ControlPlan, find_min_actuators, run_controlled, spin_up)
from .errors import ConfigError, FilmControlError
from .flow import PRESETS, Grid, from_physical
from .linear import (build_linear_system, dispersion_benney, dispersion_wr,
                     grid_state_dim)
from .lqr import cost_weights, load_gain, reduce_wr_gain, save_gain, synthesize_gain
from .stepping import SolverConfig, multi_mode_ic, single_mode_ic

USAGE_ERROR = 1
NUMERICAL_ERROR = 2
IO_ERROR = 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _open_output(path, force):
    if path == "-":
        return sys.stdout
    if os.path.exists(path) and not force:
        raise CliError(f"IOError: output file {path!r} exists (use --force)", IO_ERROR)
    try:
        return open(path, "w", newline="\n")
    except OSError as exc:
        raise CliError(f"IOError: {exc}", IO_ERROR) from exc


def _provenance(config: RunConfig, subcommand: str) -> list[str]:
    return [
        f"# filmctrl {__version__}",
        f"# subcommand: {subcommand}",
        f"# config-sha256: {config_hash(config)}",
        f"# seed: {config.seed}",
    ]


def _resolve_config(args) -> RunConfig:
    path = args.config or os.environ.get("FILMCTRL_CONFIG", "")
    try:
        config = load_config(path) if path else parse_config("")
        for item in args.set or []:
            key, _, value = item.partition("=")
            if not _:
                raise ConfigError("expected --set key=value", key=item)
            set_key(config, key.strip(), value)
    except ConfigError as exc:
        raise CliError(f"ConfigError: {exc}", USAGE_ERROR) from exc
    except OSError as exc:
        raise CliError(f"IOError: {exc}", IO_ERROR) from exc
    return config


def _solver_config(config: RunConfig) -> SolverConfig:
    return SolverConfig(dt_max=config.dt, newton_tol=config.newton_tol,
                        newton_max_iter=config.newton_max_iter,
                        blowup_threshold=config.blowup_threshold)


def _synthesize(config: RunConfig, model: str):
    params = config.parameters()
    grid = Grid(config.n, params.aspect)
    actuators = make_actuators(config.count, config.width, grid)
    system = build_linear_system(model, params, actuators, grid)
    weights = cost_weights(config.beta, grid, config.count, grid_state_dim(model, grid))
    g = synthesize_gain(system, weights, actuators)
    if model == "wr":
        g = reduce_wr_gain(g)
    return g, actuators, grid


def cmd_gain(args) -> int:
    config = _resolve_config(args)
    try:
        g, _, _ = _synthesize(config, config.design_model)
    except FilmControlError as exc:
        raise CliError(f"{type(exc).__name__}: {exc}", NUMERICAL_ERROR) from exc
    if os.path.exists(args.output) and not args.force:
        raise CliError(f"IOError: output file {args.output!r} exists (use --force)", IO_ERROR)
    save_gain(g, args.output)
    print(f"gain: {g.k.shape[0]} x {g.k.shape[1]} ({g.model}, solver {g.solver}) -> {args.output}")
    return 0


def _initial_state(config: RunConfig, grid: Grid):
    if config.initial_mode > 0:
        return single_mode_ic(config.initial_amplitude, config.initial_mode, grid)
    return multi_mode_ic(config.initial_amplitude, config.seed, grid)


def cmd_simulate(args) -> int:
    config = _resolve_config(args)
    params = config.parameters()
    grid = Grid(config.n, params.aspect)
    solver = _solver_config(config)
    try:
        if args.gain_file:
            g = load_gain(args.gain_file)
            mismatches = [
                name for name, got, want in [
                    ("reynolds", g.params.reynolds, params.reynolds),
                    ("capillary", g.params.capillary, params.capillary),
                    ("theta", g.params.theta, params.theta),
                    ("aspect", g.params.aspect, params.aspect),
                    ("n", g.n, config.n),
                    ("count", g.count, config.count),
                    ("beta", g.beta, config.beta),
                ] if got != want
            ]
            if mismatches:
                raise CliError(
                    f"ConfigError: gain file disagrees with the configuration on "
                    f"{', '.join(mismatches)}", USAGE_ERROR)
            actuators = make_actuators(config.count, g.width, grid)
        else:
            g, actuators, grid = _synthesize(config, config.design_model)

        ic = _initial_state(config, grid)
        start = spin_up(config.controlled_model, params, grid, ic,
                        config.t_spin, solver)
        plan = ControlPlan(g, actuators, config.controlled_model,
                           config.activation_time)
        result = run_controlled(plan, start, config.t_end, solver, grid,
                                snapshot_every=config.every)
    except CliError:
        raise
    except FilmControlError as exc:
        raise CliError(f"{type(exc).__name__}: {exc}", NUMERICAL_ERROR) from exc

    out = _open_output(args.output, args.force)
    with out:
        for line in _provenance(config, "simulate"):
            out.write(line + "\n")
        cols = ["t", "deviation_norm"] + [f"u_{i+1}" for i in range(config.count)] \
            + ["accumulated_cost"]
        out.write(",".join(cols) + "\n")
        for i, t in enumerate(result.times):
            row = [_fmt(t), _fmt(result.deviation_norms[i])]
            row += [_fmt(v) for v in result.controls[i]]
            row.append(_fmt(result.cost_history[i]))
            out.write(",".join(row) + "\n")

    if args.snapshots and result.snapshots:
        snap = _open_output(args.snapshots, args.force)
        with snap:
            for line in _provenance(config, "simulate-snapshots"):
                snap.write(line + "\n")
            header = ["field", "t"] + [_fmt(x) for x in grid.coordinates]
            snap.write(",".join(header) + "\n")
            for t, state in result.snapshots:
                snap.write(",".join(["h", _fmt(t)] + [_fmt(v) for v in state.h]) + "\n")
                if state.q is not None:
                    snap.write(",".join(["q", _fmt(t)] + [_fmt(v) for v in state.q]) + "\n")

    print(f"simulate: {result.termination} at t = {result.termination_time:.6g}, "
          f"final deviation {result.deviation_norms[-1]:.3e}")
    return 0


def cmd_dispersion(args) -> int:
    config = _resolve_config(args)
    params = config.parameters()
    model = args.model or config.design_model
    k_max = args.kmax if args.kmax is not None else 1.2
    ks = np.linspace(0.0, k_max, args.points)
    out = _open_output(args.output, args.force)
    with out:
        for line in _provenance(config, "dispersion"):
            out.write(line + "\n")
        if model == "benney":
            out.write("k,re_lambda_1,im_lambda_1\n")
            for k in ks:
                lam = dispersion_benney(k, params)
                out.write(f"{_fmt(k)},{_fmt(lam.real)},{_fmt(lam.imag)}\n")
        else:
            out.write("k,re_lambda_1,im_lambda_1,re_lambda_2,im_lambda_2\n")
            for k in ks:
                l1, l2 = dispersion_wr(k, params)
                out.write(f"{_fmt(k)},{_fmt(l1.real)},{_fmt(l1.imag)},"
                          f"{_fmt(l2.real)},{_fmt(l2.imag)}\n")
    return 0


def _scan_cell(payload):
    config, re, ca = payload
    params = config.parameters()
    params = type(params)(re, ca, params.theta, params.aspect)
    grid = Grid(config.n, params.aspect)
    solver = SolverConfig(dt_max=config.dt, newton_tol=config.newton_tol,
                          newton_max_iter=config.newton_max_iter,
                          blowup_threshold=config.blowup_threshold)
    started = perf_counter()
    ic = multi_mode_ic(config.initial_amplitude, config.seed, grid) \
        if config.initial_mode == 0 else single_mode_ic(config.initial_amplitude,
                                                        config.initial_mode, grid)
    scan = find_min_actuators(config.design_model, config.controlled_model,
                              params, grid, config.m_max, config.width,
                              config.beta, solver, ic=ic,
                              t_spin=config.t_spin, t_end=config.t_end)
    runtime = perf_counter() - started
    verdict = "stabilised" if scan.stabilised else f"not-stabilised(m_max={config.m_max})"
    m_min = scan.m_min if scan.m_min is not None else -1
    return (re, ca, m_min, scan.n_unstable, verdict, runtime)


def cmd_min_actuators(args) -> int:
    config = _resolve_config(args)
    cells = [(config, re, ca) for re in sorted(config.re_values)
             for ca in sorted(config.ca_values)]
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                rows = list(pool.map(_scan_cell, cells))
        else:
            rows = [_scan_cell(cell) for cell in cells]
    except FilmControlError as exc:
        raise CliError(f"{type(exc).__name__}: {exc}", NUMERICAL_ERROR) from exc
    rows.sort(key=lambda r: (r[0], r[1]))  # deterministic merge order
    out = _open_output(args.output, args.force)
    with out:
        for line in _provenance(config, "min-actuators"):
            out.write(line + "\n")
        out.write("re,ca,m_min,n_unstable,verdict,runtime_seconds\n")
        for re, ca, m_min, n_u, verdict, runtime in rows:
            out.write(f"{_fmt(re)},{_fmt(ca)},{m_min},{n_u},{verdict},{runtime:.1f}\n")
    return 0


def cmd_preset(args) -> int:
    if args.name:
        if args.name not in PRESETS:
            raise CliError(f"ConfigError: unknown preset {args.name!r}", USAGE_ERROR)
        names = [args.name]
    else:
        names = sorted(PRESETS)
    print("name      rho        mu          gamma     Re        Ca")
    for name in names:
        fluid = PRESETS[name]
        params = from_physical(fluid)
        print(f"{name:<9} {fluid.density:<10.4g} {fluid.viscosity:<11.4g} "
              f"{fluid.surface_tension:<9.4g} {params.reynolds:<9.4g} "
              f"{params.capillary:<9.4g}")
    if args.write_config:
        config = parse_config(f"parameters.preset = {args.name}" if args.name else "")
        with open(args.write_config, "w", newline="\n") as fh:
            fh.write(write_config(config))
        print(f"wrote {args.write_config}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filmctrl",
        description="LQR feedback control of falling liquid films")
    parser.add_argument("--version", action="version", version=f"filmctrl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default="", help="configuration file "
                       "(default: $FILMCTRL_CONFIG if set)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a configuration key")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing output files")

    p = sub.add_parser("gain", help="synthesize and save a feedback gain")
    add_common(p)
    p.add_argument("--output", "-o", default="gain.txt")
    p.set_defaults(func=cmd_gain)

    p = sub.add_parser("simulate", help="run a controlled nonlinear simulation")
    add_common(p)
    p.add_argument("--gain-file", default="", help="reuse a precomputed gain")
    p.add_argument("--output", "-o", default="timeseries.csv")
    p.add_argument("--snapshots", default="", help="optional interface snapshot CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dispersion", help="tabulate the analytic dispersion relation")
    add_common(p)
    p.add_argument("--model", choices=("benney", "wr"), default="")
    p.add_argument("--kmax", type=float, default=None)
    p.add_argument("--points", type=int, default=241)
    p.add_argument("--output", "-o", default="dispersion.csv")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("min-actuators", help="scan for the smallest stabilising "
                       "actuator count over a parameter grid")
    add_common(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    p.add_argument("--output", "-o", default="min_actuators.csv")
    p.set_defaults(func=cmd_min_actuators)

    p = sub.add_parser("preset", help="list fluid presets and their (Re, Ca)")
    p.add_argument("name", nargs="?", default="")
    p.add_argument("--write-config", default="", help="write a config file "
                   "resolving this preset")
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except FilmControlError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
