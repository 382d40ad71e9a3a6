"""Shared fixtures: the showcase configuration (Re=5, Ca=0.05, theta=pi/3,
L=30, N=256, M=5, beta=0.5) and the expensive artifacts derived from it
(spun-up waves, synthesized gains), computed once per session."""

import pytest

from filmctrl import (FlowParameters, Grid, cost_weights, make_actuators,
                      reduce_wr_gain, single_mode_ic, spin_up, synthesize_gain)
from filmctrl.linear import build_linear_system

# acceptance reporting: criterion number -> (title, passed, detail)
ACCEPTANCE_RESULTS = {}


def record_criterion(number, title, passed, detail=""):
    ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:2d} [{status}] {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def showcase_params():
    return FlowParameters(5.0, 0.05)


@pytest.fixture(scope="session")
def grid256():
    return Grid(256, 30.0)


@pytest.fixture(scope="session")
def grid128():
    return Grid(128, 30.0)


@pytest.fixture(scope="session")
def acts5(grid256):
    return make_actuators(5, 0.1, grid256)


@pytest.fixture(scope="session")
def benney_system(showcase_params, acts5, grid256):
    return build_linear_system("benney", showcase_params, acts5, grid256)


@pytest.fixture(scope="session")
def wr_system(showcase_params, acts5, grid256):
    return build_linear_system("wr", showcase_params, acts5, grid256)


@pytest.fixture(scope="session")
def benney_gain(benney_system, acts5, grid256):
    weights = cost_weights(0.5, grid256, 5, benney_system.state_dim)
    return synthesize_gain(benney_system, weights, acts5)


@pytest.fixture(scope="session")
def wr_gain_full(wr_system, acts5, grid256):
    weights = cost_weights(0.5, grid256, 5, wr_system.state_dim)
    return synthesize_gain(wr_system, weights, acts5)


@pytest.fixture(scope="session")
def wr_gain(wr_gain_full):
    return reduce_wr_gain(wr_gain_full)


@pytest.fixture(scope="session")
def wr_developed(showcase_params, grid256):
    """Developed wave after the default spin-up (t_spin = 200).

    This is the protocol wave for the controlled runs: large-amplitude and
    nonlinear, though the slow transient at these parameters has not fully
    settled yet (see ``wr_saturated``). The single-field model's controlled
    basin at Re = 5 contains this wave but not the fully saturated one.
    """
    ic = single_mode_ic(0.01, 1, grid256)
    return spin_up("wr", showcase_params, grid256, ic, 200.0,
                   until_saturation=False)


@pytest.fixture(scope="session")
def wr_saturated(showcase_params, grid256):
    """Fully saturated travelling wave at the showcase point.

    The transient lasts well past t = 200, so the cap is raised and the
    saturation detector decides the stopping time (around t = 310).
    """
    ic = single_mode_ic(0.01, 1, grid256)
    return spin_up("wr", showcase_params, grid256, ic, 350.0)


@pytest.fixture(scope="session")
def wr_saturated_re10(grid256):
    params = FlowParameters(10.0, 0.05)
    ic = single_mode_ic(0.01, 1, grid256)
    return spin_up("wr", params, grid256, ic, 350.0)
