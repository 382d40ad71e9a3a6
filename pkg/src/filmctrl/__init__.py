"""Feedback stabilisation of falling liquid films.

Synthesizes LQR gains from linearised reduced-order film models (the
single-field Benney equation and the two-field weighted-residual system),
runs controlled nonlinear simulations of either model, and provides the
linear stability toolkit (dispersion relations, unstable-mode counts,
minimum-actuator scans) needed to predict and verify stabilisation.
"""

__version__ = "0.1.0"

from .actuators import ActuatorConfig, actuator_matrix, assemble_forcing, bump, make_actuators
from .control import (ActuatorScan, ControlPlan, CostReport, DampingFit,
                      SimulationResult, evaluate_cost, find_min_actuators,
                      fit_damping_rate, run_controlled, run_uncontrolled, spin_up)
from .errors import (BlowUpError, ConfigError, FilmControlError,
                     IllConditionedError, InsufficientActuatorsError,
                     InsufficientDataError, NewtonError, NonStabilisableError)
from .flow import (PRESETS, FlowParameters, Grid, InterfaceState, PhysicalFluid,
                   deviation_norm, from_physical, nusselt_state, preset_parameters)
from .kernels import get_backend
from .linear import (DiffOps, LinearSystem, build_diff_ops, build_jacobian,
                     build_linear_system, count_unstable_modes,
                     critical_wavenumber, dispersion_benney, dispersion_wr)
from .lqr import (ClosedLoop, CostWeights, GainMatrix, closed_loop, cost_weights,
                  fourier_restricted_gain, gain, kalman_controllable, load_gain,
                  reduce_wr_gain, save_gain, solve_care, stabilisable,
                  synthesize_gain)
from .stepping import (BenneyStepper, SolverConfig, StepOutcome, WRStepper,
                       make_stepper, multi_mode_ic, newton_solve, single_mode_ic)
