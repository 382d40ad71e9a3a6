import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filmctrl import (PRESETS, FlowParameters, Grid, InterfaceState,
                      PhysicalFluid, deviation_norm, from_physical,
                      nusselt_state, preset_parameters)

# (Re, Ca) pairs of the physical-fluid table at h_s = 175 microns
PRESET_TABLE = {
    "water": (28.2, 0.0018),
    "ethanol": (12.6, 0.0047),
    "pentane": (178.0, 0.0045),
    "nitrogen": (5.69, 5.26e-5),
}


@pytest.mark.parametrize("name", sorted(PRESET_TABLE))
def test_preset_fidelity(name):
    params = preset_parameters(name)
    re_ref, ca_ref = PRESET_TABLE[name]
    assert abs(params.reynolds - re_ref) / re_ref < 0.03
    assert abs(params.capillary - ca_ref) / ca_ref < 0.03


def test_doubling_surface_tension_halves_capillary():
    base = PRESETS["water"]
    doubled = dataclasses.replace(base, surface_tension=2.0 * base.surface_tension)
    p0 = from_physical(base)
    p1 = from_physical(doubled)
    assert p1.capillary == p0.capillary / 2.0
    assert p1.reynolds == p0.reynolds


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.1, max_value=10.0, allow_nan=False))
def test_viscosity_scale_consistency(c):
    base = PRESETS["ethanol"]
    scaled = dataclasses.replace(base, viscosity=c * base.viscosity)
    p0 = from_physical(base)
    p1 = from_physical(scaled)
    assert p1.reynolds == pytest.approx(p0.reynolds / c ** 2, rel=1e-12)
    assert p1.capillary == pytest.approx(p0.capillary, rel=1e-12)


def test_parameter_invariants():
    with pytest.raises(ValueError):
        FlowParameters(-1.0, 0.05)
    with pytest.raises(ValueError):
        FlowParameters(5.0, 0.0)
    with pytest.raises(ValueError):
        FlowParameters(5.0, 0.05, theta=2.0)
    with pytest.raises(ValueError):
        PhysicalFluid(0.0, 1e-3, 0.05)
    with pytest.raises(KeyError):
        preset_parameters("mercury")


def test_grid_invariants():
    grid = Grid(256, 30.0)
    assert grid.spacing * grid.n == pytest.approx(grid.aspect, rel=1e-15)
    # coordinate i is exactly i * dx
    for i in (0, 1, 7, 100, 255):
        assert grid.coordinates[i] == i * grid.spacing
    for bad in (6, 9, 0):
        with pytest.raises(ValueError):
            Grid(bad, 30.0)
    with pytest.raises(AttributeError):
        grid.n = 128


def test_nusselt_state(grid256):
    state = nusselt_state(grid256)
    assert np.all(state.h == 1.0)
    assert np.all(state.q == 2.0 / 3.0)
    assert state.time == 0.0
    assert deviation_norm(state, grid256) == 0.0


def test_deviation_norm_single_mode(grid256):
    # closed form: ||a sin(2 pi x / L)|| = a sqrt(L / 2)
    a = 0.01
    h = 1.0 + a * np.sin(2.0 * np.pi * grid256.coordinates / grid256.aspect)
    norm = deviation_norm(InterfaceState(h), grid256)
    assert norm == pytest.approx(a * math.sqrt(grid256.aspect / 2.0), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=255), st.floats(min_value=0.1, max_value=5.0))
def test_deviation_norm_shift_invariance_and_homogeneity(shift, scale):
    grid = Grid(256, 30.0)
    rng = np.random.default_rng(42)
    h = 1.0 + 0.1 * rng.standard_normal(grid.n)
    base = deviation_norm(InterfaceState(h), grid)
    rolled = deviation_norm(InterfaceState(np.roll(h, shift)), grid)
    assert rolled == pytest.approx(base, rel=1e-12)
    scaled = deviation_norm(InterfaceState(1.0 + scale * (h - 1.0)), grid)
    assert scaled == pytest.approx(scale * base, rel=1e-12)


def test_interface_state_shape_check():
    with pytest.raises(ValueError):
        InterfaceState(np.ones(16), np.ones(8))
