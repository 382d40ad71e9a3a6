import numpy as np
import pytest

from filmctrl import (FlowParameters, SolverConfig, dispersion_benney,
                      dispersion_wr, make_stepper, multi_mode_ic,
                      newton_solve, nusselt_state, single_mode_ic)
from filmctrl.errors import NewtonError


@pytest.mark.parametrize("model", ["benney", "wr"])
def test_nusselt_is_a_fixed_point(model, grid128, showcase_params):
    stepper = make_stepper(model, showcase_params, grid128)
    stepper.reset(nusselt_state(grid128))
    for _ in range(5):
        out = stepper.step()
        assert out.ok
        assert np.max(np.abs(out.state.h - 1.0)) < 1e-12
        if model == "wr":
            assert np.max(np.abs(out.state.q - 2.0 / 3.0)) < 1e-12


def test_single_mode_ic(grid256):
    ic = single_mode_ic(0.01, 1, grid256)
    expected = 1.0 + 0.01 * np.sin(2 * np.pi * grid256.coordinates / 30.0)
    np.testing.assert_array_equal(ic.h, expected)
    assert np.mean(ic.h) == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(ic.q, 2.0 * ic.h ** 3 / 3.0, rtol=1e-15)


def test_multi_mode_ic_reproducible(grid256):
    a = multi_mode_ic(0.02, 7, grid256)
    b = multi_mode_ic(0.02, 7, grid256)
    np.testing.assert_array_equal(a.h, b.h)
    np.testing.assert_array_equal(a.q, b.q)
    c = multi_mode_ic(0.02, 8, grid256)
    assert not np.array_equal(a.h, c.h)
    assert np.max(np.abs(a.h - 1.0)) == pytest.approx(0.02, rel=1e-12)
    assert np.mean(a.h) == pytest.approx(1.0, abs=1e-14)


def test_flux_init_satisfies_steady_relation(grid256, showcase_params):
    # plugging q = 2 h^3 / 3 into the flux equation leaves an O(amplitude)
    # residual from the gradient terms
    from filmctrl import kernels

    dx = grid256.spacing
    coef = (showcase_params.reynolds, 2.0 * showcase_params.cot_theta,
            1.0 / showcase_params.capillary, 1.0 / (2.0 * dx), 1.0 / dx ** 3)
    resids = []
    for amp in (1e-3, 1e-4):
        ic = single_mode_ic(amp, 1, grid256)
        r = kernels.wr_residual(ic.h, ic.q, -0.0 * ic.h, -0.0 * ic.q,
                                np.zeros(grid256.n), 0.0, *coef)
        resids.append(np.max(np.abs(r[1::2])))  # flux-equation rows
    assert resids[0] < 5.0 * 1e-3
    ratio = resids[0] / resids[1]
    assert 5.0 < ratio < 20.0


def test_benney_linear_growth_rate(grid256, showcase_params):
    # amplitude-1e-4 single-mode start: fitted growth of the first Fourier
    # mode over t in [0, 5] matches the analytic rate within 2%
    stepper = make_stepper("benney", showcase_params, grid256)
    stepper.reset(single_mode_ic(1e-4, 1, grid256))
    ts, amps = [0.0], [np.abs(np.fft.rfft(stepper.state.h - 1.0)[1])]
    while stepper.time < 5.0 - 1e-12:
        out = stepper.step()
        assert out.ok
        ts.append(out.state.time)
        amps.append(np.abs(np.fft.rfft(out.state.h - 1.0)[1]))
    slope = np.polyfit(ts, np.log(amps), 1)[0]
    target = dispersion_benney(2 * np.pi / 30.0, showcase_params).real
    assert slope == pytest.approx(target, rel=0.02)


def test_wr_linear_growth_rate_complex(grid256, showcase_params):
    # the slave branch decays like exp(-5t/(2Re)); fit after it has died out
    stepper = make_stepper("wr", showcase_params, grid256)
    stepper.reset(single_mode_ic(1e-4, 1, grid256))
    ts, coeffs = [0.0], [np.fft.rfft(stepper.state.h - 1.0)[1]]
    while stepper.time < 20.0 - 1e-12:
        out = stepper.step()
        assert out.ok
        ts.append(out.state.time)
        coeffs.append(np.fft.rfft(out.state.h - 1.0)[1])
    ts = np.asarray(ts)
    coeffs = np.asarray(coeffs)
    sel = ts >= 5.0
    re_rate = np.polyfit(ts[sel], np.log(np.abs(coeffs[sel])), 1)[0]
    im_rate = np.polyfit(ts[sel], np.unwrap(np.angle(coeffs[sel])), 1)[0]
    target = dispersion_wr(2 * np.pi / 30.0, showcase_params)[0]
    assert abs(complex(re_rate, im_rate) - target) < 0.02 * abs(target)


def test_benney_blowup_at_re10(grid256):
    params = FlowParameters(10.0, 0.05)
    stepper = make_stepper("benney", params, grid256)
    stepper.reset(single_mode_ic(0.01, 1, grid256))
    status = "ok"
    while stepper.time < 50.0:
        out = stepper.step()
        if not out.ok:
            status = out.status
            break
    assert status == "blowup"
    assert out.state.time < 50.0


def test_wr_survives_re10_medium_horizon(grid256):
    params = FlowParameters(10.0, 0.05)
    stepper = make_stepper("wr", params, grid256)
    stepper.reset(single_mode_ic(0.01, 1, grid256))
    while stepper.time < 40.0 - 1e-12:
        out = stepper.step()
        assert out.ok


def test_mass_balance_per_step_with_forcing(grid256, showcase_params):
    from filmctrl import assemble_forcing, make_actuators

    acts = make_actuators(3, 0.1, grid256)
    f = assemble_forcing(np.array([0.3, -0.1, 0.2]), acts, grid256)
    stepper = make_stepper("wr", showcase_params, grid256)
    stepper.reset(single_mode_ic(0.01, 1, grid256))
    means = [float(np.mean(stepper.state.h))]
    out = stepper.step(f)  # backward-Euler bootstrap
    means.append(float(np.mean(out.state.h)))
    assert abs((means[1] - means[0]) / out.dt - np.mean(f)) < 1e-10
    for _ in range(20):
        out = stepper.step(f)
        means.append(float(np.mean(out.state.h)))
        bdf = (3.0 * means[-1] - 4.0 * means[-2] + means[-3]) / (2.0 * out.dt)
        assert abs(bdf - np.mean(f)) < 1e-10


@pytest.mark.parametrize("model", ["benney", "wr"])
def test_uncontrolled_mean_conservation(model, grid128):
    params = FlowParameters(1.0, 0.05)
    stepper = make_stepper(model, params, grid128)
    ic = multi_mode_ic(0.05, 3, grid128)
    stepper.reset(ic)
    m0 = float(np.mean(ic.h))
    for _ in range(2000):
        out = stepper.step()
        assert out.ok
    assert abs(float(np.mean(out.state.h)) - m0) < 1e-12


@pytest.mark.parametrize("model", ["benney", "wr"])
def test_temporal_second_order(model, grid128, showcase_params):
    ic = single_mode_ic(0.05, 1, grid128)

    def run(dt, t_end=4.0):
        stepper = make_stepper(model, showcase_params, grid128,
                               SolverConfig(dt_max=dt, newton_tol=1e-12))
        stepper.reset(ic)
        for _ in range(round(t_end / dt)):
            out = stepper.step(dt=dt)
            assert out.ok
        return out.state.h

    ref = run(0.05 / 8.0)
    e1 = np.max(np.abs(run(0.05) - ref))
    e2 = np.max(np.abs(run(0.025) - ref))
    order = np.log2(e1 / e2)
    assert 1.75 <= order <= 2.25


def test_determinism(grid128, showcase_params):
    def run():
        stepper = make_stepper("wr", showcase_params, grid128)
        stepper.reset(multi_mode_ic(0.02, 5, grid128))
        states = []
        for _ in range(100):
            out = stepper.step()
            states.append(out.state.h)
        return np.asarray(states)

    np.testing.assert_array_equal(run(), run())


def test_step_honors_requested_dt(grid128, showcase_params):
    stepper = make_stepper("benney", showcase_params, grid128)
    stepper.reset(single_mode_ic(0.01, 1, grid128))
    out = stepper.step(dt=0.0125)
    assert out.dt == 0.0125
    assert out.state.time == 0.0125


def test_newton_solve_linear_in_one_iteration():
    a = np.array([[2.0, 1.0], [0.0, 3.0]])
    b = np.array([1.0, -2.0])
    x, iters = newton_solve(lambda x: a @ x - b, lambda x: a,
                            np.zeros(2), 1e-12, 10)
    assert iters == 1
    np.testing.assert_allclose(x, np.linalg.solve(a, b), atol=1e-14)


def test_newton_solve_quadratic_convergence():
    history = []
    x, iters = newton_solve(lambda x: x * x - 4.0,
                            lambda x: np.array([[2.0 * x[0]]]),
                            np.array([3.0]), 1e-12, 20, history=history)
    assert x[0] == pytest.approx(2.0, abs=1e-12)
    # quadratic convergence: each residual is bounded by C * previous^2
    errors = [r for r in history if r > 1e-13]
    for e0, e1 in zip(errors, errors[1:]):
        assert e1 <= 0.1 * e0 * e0


def test_newton_solve_divergence_raises():
    # x^2 + 1 = 0 has no real root; the iteration wanders and must abort
    with pytest.raises(NewtonError):
        newton_solve(lambda x: x * x + 1.0,
                     lambda x: np.array([[2.0 * x[0]]]),
                     np.array([0.5]), 1e-12, 50)


def test_blowup_threshold_configuration():
    with pytest.raises(ValueError):
        SolverConfig(blowup_threshold=0.5)
    with pytest.raises(ValueError):
        SolverConfig(dt_max=-1.0)
