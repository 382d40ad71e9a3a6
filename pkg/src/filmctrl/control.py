"""Closed-loop simulation drivers: spin-up, controlled runs, damping-rate
fits, cost evaluation, and the minimum-actuator scan.

The hierarchical protocol pairs a design model (used for gain synthesis)
with a controlled model (time-stepped nonlinearly). At desk scale the
two-field model doubles as the truth model, so cross-model experiments run
as single-field-designed gains applied to the two-field system and vice
versa. Feedback is lagged: each step's actuator amplitudes are computed from
the beginning-of-step interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .actuators import ActuatorConfig, actuator_columns, make_actuators
from .errors import BlowUpError, InsufficientDataError, NewtonError, FilmControlError
from .flow import (NUSSELT_FLUX, FlowParameters, Grid, InterfaceState,
                   deviation_norm)
from .linear import build_linear_system, count_unstable_modes
from .lqr import GainMatrix, cost_weights, reduce_wr_gain, synthesize_gain
from .stepping import SolverConfig, make_stepper

#: Deviation norms below this are machine-precision noise, not signal.
NORM_FLOOR = 1e-11

#: Norm reduction factor that counts as a stabilised run.
REDUCTION_TARGET = 1e3


@dataclass(frozen=True)
class ControlPlan:
    """A gain paired with the model it is deployed on."""

    gain: GainMatrix
    actuators: ActuatorConfig
    controlled_model: str
    activation_time: float = 0.0

    def __post_init__(self):
        cols = self.gain.k.shape[1]
        if cols not in (self.gain.n, 2 * self.gain.n):
            raise ValueError("gain column count matches neither N nor 2N")
        if self.gain.k.shape[0] != self.actuators.count:
            raise ValueError("gain row count must match the actuator count")
        if self.controlled_model not in ("benney", "wr"):
            raise ValueError(f"unknown model {self.controlled_model!r}")


@dataclass
class SimulationResult:
    """Recorded time series of one (possibly controlled) run."""

    times: np.ndarray
    deviation_norms: np.ndarray
    controls: np.ndarray           # sample-aligned actuator amplitudes
    state_integrand: np.ndarray    # integral of (h-1)^2 dx at each sample
    control_integrand: np.ndarray  # integral of f^2 dx at each sample
    cost_history: np.ndarray       # running trapezoid of the weighted cost
    beta: float
    termination: str               # "completed" | "blowup" | "newton-failure"
    termination_time: float
    final_state: InterfaceState
    snapshots: list = field(default_factory=list)
    stop_reason: str = ""

    @property
    def accumulated_cost(self) -> float:
        return float(self.cost_history[-1])


@dataclass(frozen=True)
class DampingFit:
    """Least-squares exponential rate of the deviation-norm decay."""

    rate: float
    fit_window: tuple[float, float]
    residual: float
    confident: bool
    samples: int


@dataclass(frozen=True)
class CostReport:
    kappa: float
    horizon: float
    tail_estimate: float


def _spin_up_saturated(norms, window, rtol):
    """True when the deviation norm varied less than rtol over the window."""
    times = np.asarray([t for t, _ in norms])
    vals = np.asarray([v for _, v in norms])
    if times.size < 4 or times[-1] - times[0] < window:
        return False
    sel = times >= times[-1] - window
    w = vals[sel]
    mean = float(np.mean(w))
    if mean < 1e-6:  # converged to flat, not a saturated wave
        return True
    return float(np.max(w) - np.min(w)) < rtol * mean


def spin_up(model: str, params: FlowParameters, grid: Grid, ic: InterfaceState,
            t_spin: float, config: SolverConfig | None = None,
            until_saturation: bool = True, saturation_window: float = 50.0,
            saturation_rtol: float = 0.05) -> InterfaceState:
    """Evolve uncontrolled until t_spin (or earlier saturation of the
    deviation norm) and relabel the result to time zero.

    Blow-up and Newton failure propagate as exceptions; the single-field
    model is expected to blow up here at large Re, in which case the caller
    should spin up with the two-field model instead.
    """
    if t_spin < 0:
        raise ValueError("t_spin must be non-negative")
    if t_spin == 0.0:
        return ic
    stepper = make_stepper(model, params, grid, config)
    stepper.reset(InterfaceState(ic.h, ic.q, 0.0))
    norms = [(0.0, deviation_norm(ic, grid))]
    min_window = max(2.0 * saturation_window, 0.5 * t_spin)
    while stepper.time < t_spin - 1e-12:
        out = stepper.step()
        if out.status == "blowup":
            raise BlowUpError(out.state.time)
        if out.status == "newton-failure":
            raise NewtonError(f"spin-up Newton failure at t = {out.state.time:.6g}")
        norms.append((out.state.time, deviation_norm(out.state, grid)))
        if until_saturation and stepper.time >= min_window \
                and _spin_up_saturated(norms, saturation_window, saturation_rtol):
            break
    final = stepper.state
    return InterfaceState(final.h, final.q, 0.0)


def _effective_gain(plan: ControlPlan) -> tuple[np.ndarray, bool]:
    """(matrix, full_state): the gain actually applied at run time.

    A 2N-column gain deployed on the two-field model observes both fields;
    anywhere else it is first reduced with the flux slaving q = 2 h.
    """
    k = plan.gain.k
    if k.shape[1] == 2 * plan.gain.n:
        if plan.controlled_model == "wr":
            return k, True
        return reduce_wr_gain(plan.gain).k, False
    return k, False


def run_controlled(plan: ControlPlan, start: InterfaceState, t_end: float,
                   config: SolverConfig | None = None, grid: Grid | None = None,
                   snapshot_every: int = 0, stop_check=None,
                   check_interval: float = 5.0) -> SimulationResult:
    """Run the nonlinear controlled simulation from ``start`` to ``t_end``.

    u(t) = K (h - 1) is evaluated each step from the beginning-of-step state
    (plus the flux deviation for a full two-field gain); the assembled
    forcing is then held fixed during the implicit solve. ``stop_check``
    receives (times, norms) arrays every ``check_interval`` time units and
    may return a string reason to stop the run early.
    """
    gain = plan.gain
    params = gain.params
    if grid is None:
        grid = Grid(gain.n, params.aspect)
    k_eff, full_state = _effective_gain(plan)
    cols = actuator_columns(plan.actuators, grid)
    beta = gain.beta
    dx = grid.spacing

    q0 = start.q
    if plan.controlled_model == "wr" and q0 is None:
        q0 = 2.0 * (start.h ** 3) / 3.0  # local Nusselt flux
    stepper = make_stepper(plan.controlled_model, params, grid, config)
    stepper.reset(InterfaceState(start.h, q0, 0.0))

    def control_amplitudes(state):
        if state.time < plan.activation_time:
            return np.zeros(plan.actuators.count)
        dh = state.h - 1.0
        if full_state:
            dq = state.q - NUSSELT_FLUX
            return k_eff[:, :grid.n] @ dh + k_eff[:, grid.n:] @ dq
        return k_eff @ dh

    times = [0.0]
    norms = [deviation_norm(stepper.state, grid)]
    controls = []
    state_int = [float(np.sum((stepper.state.h - 1.0) ** 2)) * dx]
    control_int = []
    cost = [0.0]
    snapshots = []
    termination = "completed"
    termination_time = t_end
    stop_reason = ""
    next_check = check_interval
    step_index = 0

    if snapshot_every > 0:
        snapshots.append((0.0, stepper.state))

    while stepper.time < t_end - 1e-12:
        state = stepper.state
        u = control_amplitudes(state)
        f = cols @ u
        controls.append(u)
        control_int.append(float(np.sum(f * f)) * dx)

        out = stepper.step(f)
        step_index += 1
        t_new = out.state.time
        times.append(t_new)
        norms.append(deviation_norm(out.state, grid))
        state_int.append(float(np.sum((out.state.h - 1.0) ** 2)) * dx)
        # trapezoid increment of beta*int h^2 + (1-beta)*int f^2; the forcing
        # is piecewise constant per step so both endpoints use the same f
        g_old = beta * state_int[-2] + (1.0 - beta) * control_int[-1]
        g_new = beta * state_int[-1] + (1.0 - beta) * control_int[-1]
        cost.append(cost[-1] + 0.5 * (g_old + g_new) * out.dt)

        if snapshot_every > 0 and step_index % snapshot_every == 0:
            snapshots.append((t_new, out.state))

        if out.status != "ok":
            termination = out.status
            termination_time = t_new
            break
        if stop_check is not None and t_new >= next_check:
            next_check = t_new + check_interval
            reason = stop_check(np.asarray(times), np.asarray(norms))
            if reason:
                stop_reason = reason
                termination_time = t_new
                break

    # final sample: the run ends before another control is applied, so pad
    # the control history with the last applied amplitudes
    controls.append(controls[-1] if controls else np.zeros(plan.actuators.count))
    control_int.append(control_int[-1] if control_int else 0.0)

    return SimulationResult(
        times=np.asarray(times),
        deviation_norms=np.asarray(norms),
        controls=np.asarray(controls),
        state_integrand=np.asarray(state_int),
        control_integrand=np.asarray(control_int),
        cost_history=np.asarray(cost),
        beta=beta,
        termination=termination,
        termination_time=termination_time,
        final_state=stepper.state,
        snapshots=snapshots,
        stop_reason=stop_reason,
    )


def run_uncontrolled(model: str, params: FlowParameters, grid: Grid,
                     start: InterfaceState, t_end: float,
                     config: SolverConfig | None = None,
                     snapshot_every: int = 0) -> SimulationResult:
    """Uncontrolled run recorded with the same bookkeeping (f = 0)."""
    zero_gain = GainMatrix(np.zeros((1, grid.n)), model, params, 0.5, 1,
                           float("nan"), grid.n, "zero")
    actuators = make_actuators(1, 0.1, grid)
    plan = ControlPlan(zero_gain, actuators, model, activation_time=t_end + 1.0)
    return run_controlled(plan, start, t_end, config, grid,
                          snapshot_every=snapshot_every)


# ---------------------------------------------------------------------------
# Damping-rate fit and cost functional
# ---------------------------------------------------------------------------

def _slope(t, y):
    tm = t - t.mean()
    return float(np.dot(tm, y - y.mean()) / np.dot(tm, tm))


def fit_damping_rate(result: SimulationResult, activation_time: float | None = None,
                     floor: float = NORM_FLOOR, transient_fraction: float = 0.1,
                     min_samples: int = 20) -> DampingFit:
    """Least-squares slope of log ||h - 1|| over the post-activation window.

    The first ``transient_fraction`` of the window and samples at the
    machine-precision floor are excluded. The fit is confident when the
    slope sign is stable across the last three expanding windows.
    """
    if activation_time is None:
        activation_time = 0.0
    t = result.times
    y = result.deviation_norms
    span = t[-1] - activation_time
    t_a = activation_time + transient_fraction * span
    usable = (t >= t_a) & (y > floor)
    if int(np.sum(usable)) < min_samples:
        raise InsufficientDataError(
            f"only {int(np.sum(usable))} usable samples for the damping fit")
    tu = t[usable]
    lu = np.log(y[usable])
    rate = _slope(tu, lu)
    fitted = lu.mean() + rate * (tu - tu.mean())
    residual = float(np.sqrt(np.mean((lu - fitted) ** 2)))

    signs = []
    for frac in (0.5, 0.75, 1.0):
        t_b = tu[0] + frac * (tu[-1] - tu[0])
        sel = tu <= t_b
        if int(np.sum(sel)) >= max(min_samples // 2, 5):
            signs.append(math.copysign(1.0, _slope(tu[sel], lu[sel])))
    confident = len(signs) == 3 and len(set(signs)) == 1
    return DampingFit(rate, (float(tu[0]), float(tu[-1])), residual, confident,
                      int(np.sum(usable)))


def evaluate_cost(result: SimulationResult, beta: float | None = None) -> CostReport:
    """Finite-horizon trapezoid cost kappa = int int beta (h-1)^2 +
    (1-beta) f^2 dx dt, with a decay-based estimate of the truncated tail."""
    if beta is None:
        beta = result.beta
    t = result.times
    g = beta * result.state_integrand + (1.0 - beta) * result.control_integrand
    kappa = float(np.trapezoid(g, t))
    tail = float("nan")
    if result.termination == "completed" and g[-1] > 0:
        try:
            fit = fit_damping_rate(result)
            if fit.rate < 0:
                tail = g[-1] / (2.0 * abs(fit.rate))
        except InsufficientDataError:
            pass
    return CostReport(kappa, float(t[-1]), tail)


# ---------------------------------------------------------------------------
# Stabilisation verdicts and the minimum-actuator scan
# ---------------------------------------------------------------------------

def _verdict_stop_check(activation_norm: float, min_time: float = 50.0):
    """Early-abort rule for classification runs: stop as soon as the outcome
    is beyond doubt (norm at the floor, big decay, or confident growth)."""

    def check(times, norms):
        if norms[-1] < NORM_FLOOR:
            return "floor"
        if norms[-1] < activation_norm / REDUCTION_TARGET:
            return "reduced"
        if times[-1] < min_time:
            return ""
        # confident growth well above the starting level: give up early
        recent = norms[times >= times[-1] - min_time]
        if norms[-1] > 10.0 * activation_norm and np.all(np.diff(recent[-5:]) > 0):
            return "growing"
        return ""

    return check


def classify_run(result: SimulationResult, activation_norm: float) -> str:
    """"stabilised" or "not-stabilised" per the scan protocol."""
    if result.termination in ("blowup", "newton-failure"):
        return "not-stabilised"
    if result.stop_reason in ("floor", "reduced"):
        return "stabilised"
    if result.stop_reason == "growing":
        return "not-stabilised"
    final = result.deviation_norms[-1]
    if final < NORM_FLOOR or final < activation_norm / REDUCTION_TARGET:
        return "stabilised"
    try:
        fit = fit_damping_rate(result)
    except InsufficientDataError:
        return "not-stabilised"
    if fit.confident and fit.rate < 0 and final < activation_norm / REDUCTION_TARGET:
        return "stabilised"
    return "not-stabilised"


@dataclass
class ActuatorScan:
    """Outcome of the ascending minimum-actuator search."""

    m_min: int | None
    n_unstable: int
    verdicts: dict
    params: FlowParameters

    @property
    def stabilised(self) -> bool:
        return self.m_min is not None


def find_min_actuators(design_model: str, controlled_model: str,
                       params: FlowParameters, grid: Grid, m_max: int,
                       width: float = 0.1, beta: float = 0.5,
                       config: SolverConfig | None = None,
                       ic: InterfaceState | None = None,
                       t_spin: float = 200.0, t_end: float = 500.0,
                       spun_up: InterfaceState | None = None) -> ActuatorScan:
    """Ascending scan over M = 1..m_max for the smallest stabilising count.

    Gains are synthesized on the design model and deployed on the controlled
    model from a shared spun-up state. Synthesis failures count as
    non-stabilising for that M.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    from .stepping import multi_mode_ic

    if spun_up is None:
        if ic is None:
            ic = multi_mode_ic(0.01, 0, grid)
        spun_up = spin_up(controlled_model, params, grid, ic, t_spin, config)
    activation_norm = deviation_norm(spun_up, grid)

    verdicts = {}
    m_min = None
    for m in range(1, m_max + 1):
        actuators = make_actuators(m, width, grid)
        try:
            system = build_linear_system(design_model, params, actuators, grid)
            weights = cost_weights(beta, grid, m, system.state_dim)
            g = synthesize_gain(system, weights, actuators)
            if design_model == "wr":
                g = reduce_wr_gain(g)
        except FilmControlError as exc:
            verdicts[m] = f"synthesis-failed: {type(exc).__name__}"
            continue
        plan = ControlPlan(g, actuators, controlled_model)
        result = run_controlled(plan, spun_up, t_end, config, grid,
                                stop_check=_verdict_stop_check(activation_norm))
        verdict = classify_run(result, activation_norm)
        verdicts[m] = verdict
        if verdict == "stabilised":
            m_min = m
            break
    return ActuatorScan(m_min, count_unstable_modes(params), verdicts, params)
