"""Implicit time integration of the fully nonlinear reduced-order models.

Both models are advanced with a second-order backward-difference scheme
(one backward-Euler bootstrap step initialises the history) and the implicit
system is solved by direct Newton iteration with the exact analytic Jacobian
in periodic-banded form. Variable step sizes are supported: the scheme's
coefficients are recomputed from the ratio of consecutive steps, and a step
that defeats Newton is retried with a halved dt, growing back towards the
cap afterwards.

Forcing is treated explicitly within each implicit step: the caller provides
the forcing vector evaluated from the beginning-of-step interface, which
keeps the Newton Jacobian independent of the feedback gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .errors import NewtonError
from .flow import FlowParameters, Grid, InterfaceState


@dataclass(frozen=True)
class SolverConfig:
    """Newton/backward-difference controls for the nonlinear steppers."""

    dt_max: float = 0.05
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    blowup_threshold: float = 10.0
    dt_min: float = 1e-7
    polish: bool = True  # one extra Newton update after the tolerance is met

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if not self.blowup_threshold > 1:
            raise ValueError("blowup_threshold must exceed 1")


@dataclass(frozen=True)
class StepOutcome:
    """Result of one attempted time step."""

    state: InterfaceState
    newton_iters: int
    status: str  # "ok" | "blowup" | "newton-failure"
    dt: float

    @property
    def ok(self) -> bool:
        return self.status == "ok"


# ---------------------------------------------------------------------------
# Periodic banded linear algebra
# ---------------------------------------------------------------------------

def dense_from_bands(offsets, bands) -> np.ndarray:
    """Materialise the periodic banded matrix (row i, column (i+o) mod n)."""
    n = bands.shape[1]
    a = np.zeros((n, n))
    idx = np.arange(n)
    for j, o in enumerate(offsets):
        a[idx, (idx + o) % n] = bands[j]
    return a


def solve_periodic_banded(offsets, bands, rhs) -> np.ndarray:
    """Solve the periodic banded system via a pivoted banded factorization
    plus a low-rank Woodbury correction for the wrap-around entries.

    Falls back to a dense solve if the truncated banded core happens to be
    singular (the full periodic matrix may still be invertible then).
    """
    n = bands.shape[1]
    lo = -min(offsets)
    up = max(offsets)
    if n <= lo + up:
        return np.linalg.solve(dense_from_bands(offsets, bands), rhs)

    # LAPACK band storage: ab[up - o, j] = A[j - o, j]; np.roll places each
    # band so wrap-around values land on the ignored padding positions.
    ab = np.zeros((lo + up + 1, n))
    wrap_rows: list[np.ndarray] = []
    wrap_cols: list[np.ndarray] = []
    wrap_vals: list[np.ndarray] = []
    for j, o in enumerate(offsets):
        ab[up - o] = np.roll(bands[j], o)
        if o > 0:
            rows = np.arange(n - o, n)
            wrap_rows.append(rows)
            wrap_cols.append(rows + o - n)
            wrap_vals.append(bands[j][rows])
        elif o < 0:
            rows = np.arange(0, -o)
            wrap_rows.append(rows)
            wrap_cols.append(rows + n + o)
            wrap_vals.append(bands[j][rows])

    rows = np.concatenate(wrap_rows)
    cols = np.concatenate(wrap_cols)
    vals = np.concatenate(wrap_vals)
    uniq_cols, col_idx = np.unique(cols, return_inverse=True)
    k = uniq_cols.size
    u = np.zeros((n, k))
    u[rows, col_idx] += vals

    try:
        stacked = np.column_stack([rhs, u])
        y = scipy.linalg.solve_banded((lo, up), ab, stacked,
                                      overwrite_ab=True, overwrite_b=True)
        y_r = y[:, 0]
        y_u = y[:, 1:]
        cap = np.eye(k) + y_u[uniq_cols, :]
        correction = np.linalg.solve(cap, y_r[uniq_cols])
        return y_r - y_u @ correction
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
        return np.linalg.solve(dense_from_bands(offsets, bands), rhs)


# ---------------------------------------------------------------------------
# Newton iteration
# ---------------------------------------------------------------------------

def newton_solve(residual_fn, jacobian_fn, guess, tol, max_iter,
                 linear_solve=None, polish=False, history=None):
    """Direct Newton iteration with an exact analytic Jacobian.

    ``jacobian_fn`` may return a dense matrix (solved with LAPACK) or
    whatever representation ``linear_solve`` accepts. Divergence is declared
    after three consecutive residual increases or a non-finite residual.
    Returns (solution, iterations-to-tolerance).
    """
    if linear_solve is None:
        linear_solve = lambda jac, r: np.linalg.solve(np.atleast_2d(jac), r)
    x = np.array(guess, dtype=float, copy=True)
    prev_norm = np.inf
    grow_count = 0
    for it in range(max_iter + 1):
        r = residual_fn(x)
        rnorm = float(np.max(np.abs(r)))
        if history is not None:
            history.append(rnorm)
        if not np.isfinite(rnorm):
            raise NewtonError("non-finite residual", iterations=it,
                              residual=rnorm, diverged=True)
        if rnorm <= tol:
            if polish and rnorm > 0.0:
                x = x - linear_solve(jacobian_fn(x), r)
            return x, it
        if rnorm > prev_norm:
            grow_count += 1
            if grow_count >= 3:
                raise NewtonError("residual grew for 3 consecutive iterations",
                                  iterations=it, residual=rnorm, diverged=True)
        else:
            grow_count = 0
        if it == max_iter:
            break
        x = x - linear_solve(jacobian_fn(x), r)
        prev_norm = rnorm
    raise NewtonError(f"no convergence within {max_iter} iterations",
                      iterations=max_iter, residual=prev_norm)


def _bdf_coefficients(dt, dt_prev):
    """(alpha0, a1, a2) with d/dt x ~ alpha0 x_new + a1 x_n + a2 x_{n-1}.

    Variable-step BDF2; backward Euler when no previous step exists.
    """
    if dt_prev is None:
        return 1.0 / dt, -1.0 / dt, 0.0
    rho = dt / dt_prev
    alpha0 = (1.0 + 2.0 * rho) / (dt * (1.0 + rho))
    a1 = -(1.0 + rho) / dt
    a2 = (rho * rho) / (dt * (1.0 + rho))
    return alpha0, a1, a2


# ---------------------------------------------------------------------------
# Steppers
# ---------------------------------------------------------------------------

class _StepperBase:
    model: str

    def __init__(self, params: FlowParameters, grid: Grid,
                 config: SolverConfig | None = None):
        self.params = params
        self.grid = grid
        self.config = config if config is not None else SolverConfig()
        dx = grid.spacing
        # scalar coefficients shared by both kernel backends
        self._coef = (params.reynolds, 2.0 * params.cot_theta, 1.0 / params.capillary,
                      1.0 / (2.0 * dx), 1.0 / (dx * dx * dx))
        self._dt_next = self.config.dt_max
        self._t = 0.0

    @property
    def time(self) -> float:
        return self._t

    def _classify(self, h) -> str:
        if not np.all(np.isfinite(h)):
            return "blowup"
        if float(np.max(h)) >= self.config.blowup_threshold or float(np.min(h)) <= 0.0:
            return "blowup"
        return "ok"

    def step(self, forcing=None, dt: float | None = None) -> StepOutcome:
        """Advance one implicit step; retries with halved dt on Newton failure."""
        cfg = self.config
        f = (np.zeros(self.grid.n) if forcing is None
             else np.asarray(forcing, dtype=float))
        dt_try = min(dt if dt is not None else self._dt_next, cfg.dt_max)
        while True:
            try:
                fields, iters = self._advance(f, dt_try)
            except NewtonError as err:
                if dt_try * 0.5 >= cfg.dt_min:
                    dt_try *= 0.5
                    continue
                last = getattr(err, "last_iterate", None)
                blown = last is not None and (not np.all(np.isfinite(last))
                                              or float(np.max(np.abs(last))) > 2.0)
                status = "blowup" if blown else "newton-failure"
                return StepOutcome(self.state, err.iterations, status, dt_try)
            break
        t_new = self._t + dt_try
        status = self._classify(fields[0])
        self._commit(fields, dt_try, t_new)
        # grow the step back towards the cap after a forced reduction
        self._dt_next = min(dt_try * 1.5, cfg.dt_max)
        return StepOutcome(self.state, iters, status, dt_try)


class BenneyStepper(_StepperBase):
    """Single-field model: dh/dt + d/dx q(h, f) = f with the flux enslaved
    to the height."""

    model = "benney"

    def reset(self, state: InterfaceState) -> None:
        if state.h.shape != (self.grid.n,):
            raise ValueError("state size does not match the grid")
        self._h = np.array(state.h, dtype=float, copy=True)
        self._h_prev = None
        self._dt_prev = None
        self._t = float(state.time)
        self._dt_next = self.config.dt_max

    @property
    def state(self) -> InterfaceState:
        return InterfaceState(self._h.copy(), None, self._t)

    def flux(self, h=None, forcing=None) -> np.ndarray:
        h = self._h if h is None else np.asarray(h, dtype=float)
        f = np.zeros(self.grid.n) if forcing is None else np.asarray(forcing, dtype=float)
        return kernels.benney_flux(h, f, *self._coef)

    def _advance(self, f, dt):
        cfg = self.config
        alpha0, a1, a2 = _bdf_coefficients(dt, self._dt_prev)
        if self._h_prev is None:
            hist = a1 * self._h
            guess = self._h
        else:
            hist = a1 * self._h + a2 * self._h_prev
            guess = self._h + (self._h - self._h_prev) * (dt / self._dt_prev)

        def residual(h):
            return kernels.benney_residual(h, hist, f, alpha0, *self._coef)

        def jacobian(h):
            return kernels.benney_bands(h, f, alpha0, *self._coef)

        def lin_solve(bands, r):
            return solve_periodic_banded(kernels.BENNEY_OFFSETS, bands, r)

        try:
            h_new, iters = newton_solve(residual, jacobian, guess, cfg.newton_tol,
                                        cfg.newton_max_iter, linear_solve=lin_solve,
                                        polish=cfg.polish)
        except NewtonError as err:
            err.last_iterate = guess
            raise
        return (h_new,), iters

    def _commit(self, fields, dt, t_new):
        self._h_prev = self._h
        self._h = fields[0]
        self._dt_prev = dt
        self._t = t_new


class WRStepper(_StepperBase):
    """Two-field model with its own flux evolution equation."""

    model = "wr"

    def reset(self, state: InterfaceState) -> None:
        if state.h.shape != (self.grid.n,):
            raise ValueError("state size does not match the grid")
        if state.q is None:
            raise ValueError("the two-field model needs both h and q")
        self._h = np.array(state.h, dtype=float, copy=True)
        self._q = np.array(state.q, dtype=float, copy=True)
        self._h_prev = None
        self._q_prev = None
        self._dt_prev = None
        self._t = float(state.time)
        self._dt_next = self.config.dt_max

    @property
    def state(self) -> InterfaceState:
        return InterfaceState(self._h.copy(), self._q.copy(), self._t)

    def _advance(self, f, dt):
        cfg = self.config
        n = self.grid.n
        alpha0, a1, a2 = _bdf_coefficients(dt, self._dt_prev)
        if self._h_prev is None:
            histh = a1 * self._h
            histq = a1 * self._q
            guess = np.empty(2 * n)
            guess[0::2] = self._h
            guess[1::2] = self._q
        else:
            histh = a1 * self._h + a2 * self._h_prev
            histq = a1 * self._q + a2 * self._q_prev
            ratio = dt / self._dt_prev
            guess = np.empty(2 * n)
            guess[0::2] = self._h + (self._h - self._h_prev) * ratio
            guess[1::2] = self._q + (self._q - self._q_prev) * ratio

        def residual(x):
            return kernels.wr_residual(np.ascontiguousarray(x[0::2]),
                                       np.ascontiguousarray(x[1::2]),
                                       histh, histq, f, alpha0, *self._coef)

        def jacobian(x):
            return kernels.wr_bands(np.ascontiguousarray(x[0::2]),
                                    np.ascontiguousarray(x[1::2]),
                                    histq, f, alpha0, *self._coef)

        def lin_solve(bands, r):
            return solve_periodic_banded(kernels.WR_OFFSETS, bands, r)

        try:
            x, iters = newton_solve(residual, jacobian, guess, cfg.newton_tol,
                                    cfg.newton_max_iter, linear_solve=lin_solve,
                                    polish=cfg.polish)
        except NewtonError as err:
            err.last_iterate = guess[0::2]
            raise
        return (np.ascontiguousarray(x[0::2]), np.ascontiguousarray(x[1::2])), iters

    def _commit(self, fields, dt, t_new):
        self._h_prev = self._h
        self._q_prev = self._q
        self._h = fields[0]
        self._q = fields[1]
        self._dt_prev = dt
        self._t = t_new


def make_stepper(model: str, params: FlowParameters, grid: Grid,
                 config: SolverConfig | None = None):
    if model == "benney":
        return BenneyStepper(params, grid, config)
    if model == "wr":
        return WRStepper(params, grid, config)
    raise ValueError(f"unknown model {model!r}; expected 'benney' or 'wr'")


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------

def _with_flux(h: np.ndarray) -> np.ndarray:
    # local Nusselt flux q = 2 h^3 / 3
    return 2.0 * (h * h * h) / 3.0


def single_mode_ic(amplitude: float, mode: int, grid: Grid) -> InterfaceState:
    """h = 1 + a sin(2 pi m x / L) with zero spatial mean; q set to the local
    Nusselt flux for use with the two-field model."""
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    h = 1.0 + amplitude * np.sin(2.0 * np.pi * mode * grid.coordinates / grid.aspect)
    return InterfaceState(h, _with_flux(h), 0.0)


def multi_mode_ic(amplitude: float, seed: int, grid: Grid, modes: int = 6) -> InterfaceState:
    """Seeded random superposition of the first few Fourier modes, scaled to
    max|h - 1| = amplitude. Bit-for-bit reproducible for a fixed seed."""
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    rng = np.random.default_rng(seed)
    x = grid.coordinates
    pert = np.zeros(grid.n)
    for m in range(1, modes + 1):
        amp = rng.uniform(0.3, 1.0) / m
        phase = rng.uniform(0.0, 2.0 * np.pi)
        pert += amp * np.sin(2.0 * np.pi * m * x / grid.aspect + phase)
    pert *= amplitude / np.max(np.abs(pert))
    h = 1.0 + pert
    return InterfaceState(h, _with_flux(h), 0.0)
