#!/usr/bin/env python3
"""Benchmark the compiled stepping kernels against the pure-NumPy fallback.

Times residual/Jacobian assembly for both models and a full implicit step
driven by each backend, across grid sizes. Run from the repository root:

    python benchmarks/bench_backends.py [--sizes 128,256,512] [--repeat 200]
"""

import argparse
import time

import numpy as np

from filmctrl import FlowParameters, Grid, SolverConfig, single_mode_ic
from filmctrl import _fdcore_py
from filmctrl.stepping import WRStepper

try:
    from filmctrl import _fdcore
except ImportError:
    _fdcore = None


def _coef(params, grid):
    dx = grid.spacing
    return (params.reynolds, 2.0 * params.cot_theta, 1.0 / params.capillary,
            1.0 / (2.0 * dx), 1.0 / (dx * dx * dx))


def time_call(fn, repeat):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def bench_assembly(backend, params, grid, repeat):
    rng = np.random.default_rng(0)
    h = 1.0 + 0.1 * rng.standard_normal(grid.n)
    q = 2.0 / 3.0 + 0.1 * rng.standard_normal(grid.n)
    f = 0.01 * rng.standard_normal(grid.n)
    hist = rng.standard_normal(grid.n)
    coef = _coef(params, grid)
    return {
        "benney residual": time_call(
            lambda: backend.benney_residual(h, hist, f, 30.0, *coef), repeat),
        "benney bands": time_call(
            lambda: backend.benney_bands(h, f, 30.0, *coef), repeat),
        "wr residual": time_call(
            lambda: backend.wr_residual(h, q, hist, hist, f, 30.0, *coef), repeat),
        "wr bands": time_call(
            lambda: backend.wr_bands(h, q, hist, f, 30.0, *coef), repeat),
    }


def bench_step(backend_name, params, grid, repeat, monkeypatch_module):
    """Average wall time of one implicit two-field step under a backend."""
    import filmctrl.kernels as kernels

    saved = {name: getattr(kernels, name) for name in
             ("benney_flux", "benney_residual", "benney_bands",
              "wr_residual", "wr_bands")}
    try:
        for name in saved:
            setattr(kernels, name, getattr(monkeypatch_module, name))
        stepper = WRStepper(params, grid, SolverConfig())
        stepper.reset(single_mode_ic(0.05, 1, grid))
        for _ in range(10):  # warm up away from the trivial state
            stepper.step()
        t0 = time.perf_counter()
        for _ in range(repeat):
            stepper.step()
        return (time.perf_counter() - t0) / repeat
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="128,256,512")
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()

    if _fdcore is None:
        print("compiled extension not built; showing the NumPy backend only")
    params = FlowParameters(5.0, 0.05)

    for n in (int(s) for s in args.sizes.split(",")):
        grid = Grid(n, 30.0)
        py = bench_assembly(_fdcore_py, params, grid, args.repeat)
        cy = bench_assembly(_fdcore, params, grid, args.repeat) if _fdcore else None
        print(f"\nN = {n}")
        print(f"  {'kernel':<16} {'numpy':>10} {'cython':>10} {'speedup':>8}")
        for name, t_py in py.items():
            if cy:
                print(f"  {name:<16} {t_py * 1e6:>8.1f}us {cy[name] * 1e6:>8.1f}us "
                      f"{t_py / cy[name]:>7.1f}x")
            else:
                print(f"  {name:<16} {t_py * 1e6:>8.1f}us {'-':>10} {'-':>8}")
        t_step_py = bench_step("python", params, grid, 50, _fdcore_py)
        line = f"  {'full wr step':<16} {t_step_py * 1e6:>8.1f}us"
        if _fdcore:
            t_step_cy = bench_step("cython", params, grid, 50, _fdcore)
            line += f" {t_step_cy * 1e6:>8.1f}us {t_step_py / t_step_cy:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
