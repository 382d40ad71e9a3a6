import math

import numpy as np
import pytest

from filmctrl import (FlowParameters, Grid, build_diff_ops, build_jacobian,
                      count_unstable_modes, critical_wavenumber,
                      dispersion_benney, dispersion_wr)
from filmctrl.linear import (benney_mode_eigenvalue, count_unstable_eigenvalues,
                             real_fourier_basis, unstable_modes,
                             wr_artifact_vectors, wr_deflated_eigenvalues,
                             wr_mode_eigenvalues)

# frozen oracle values (direct evaluation cross-checked by bisection on the
# sign change of the growth rate)
K0_SHOWCASE = 0.5850341640289373          # Re=5, Ca=0.05, theta=pi/3
K0_WATER_TABLE = 0.2813139510065531       # Re=28.2, Ca=0.0018, theta=pi/3
RE_LAMBDA_AT_03 = 0.15135898384862242     # Re=5, Ca=0.05, k=0.3


@pytest.fixture(scope="module")
def ops(grid256):
    return build_diff_ops(grid256)


def test_diff_ops_annihilate_constants(grid256, ops):
    ones = np.ones(grid256.n)
    assert np.max(np.abs(ops.d1 @ ones)) == 0.0
    for d in (ops.d2, ops.d3, ops.d4):
        assert np.max(np.abs(d @ ones)) < 1e-12 * np.max(np.abs(d))


def test_diff_ops_row_sums(grid256, ops):
    for d in (ops.d1, ops.d2, ops.d3, ops.d4):
        assert np.max(np.abs(np.sum(d, axis=1))) < 1e-12 * np.max(np.abs(d))


def test_diff_ops_circulant_structure(grid256, ops):
    for d in (ops.d1, ops.d2, ops.d3, ops.d4):
        np.testing.assert_array_equal(d[3], np.roll(d[0], 3))


def test_d1_d3_antisymmetry(grid256, ops):
    assert np.max(np.abs(ops.d1 + ops.d1.T)) == 0.0
    assert np.max(np.abs(ops.d3 + ops.d3.T)) == 0.0


def test_d2_discrete_symbol(grid256, ops):
    # a sampled sine is an exact eigenvector with the modified wavenumber
    m = 3
    k = 2.0 * np.pi * m / grid256.aspect
    dx = grid256.spacing
    s = np.sin(k * grid256.coordinates)
    modified = (2.0 - 2.0 * math.cos(k * dx)) / dx ** 2
    np.testing.assert_allclose(ops.d2 @ s, -modified * s, atol=1e-10 * modified)


def test_benney_jacobian_coefficient_cancellation(grid256):
    # at Re = (5/4) cot(theta) the second-derivative coefficient vanishes
    theta = math.pi / 3
    ct = math.cos(theta) / math.sin(theta)
    params = FlowParameters(1.25 * ct, 0.05, theta)
    ops = build_diff_ops(grid256)
    jac = build_jacobian("benney", params, grid256)
    expected = -2.0 * ops.d1 - ops.d4 / (3.0 * params.capillary)
    # the cancellation is exact up to one rounding of the coefficient
    assert np.max(np.abs(jac - expected)) < 1e-12 * np.max(np.abs(ops.d2))


def test_wr_jacobian_on_constant_mode(grid256, showcase_params):
    jac = build_jacobian("wr", showcase_params, grid256)
    n = grid256.n
    vec = np.concatenate([np.ones(n), np.zeros(n)])
    out = jac @ vec
    np.testing.assert_allclose(out[:n], 0.0, atol=1e-12)
    np.testing.assert_allclose(out[n:], 5.0 / showcase_params.reynolds, rtol=1e-12)


@pytest.mark.parametrize("model", ["benney", "wr"])
def test_jacobian_eigenvalues_match_dispersion(model, grid256, showcase_params):
    for m in (1, 2, 3, 4):
        k = 2.0 * np.pi * m / grid256.aspect
        if model == "benney":
            lam_disc = benney_mode_eigenvalue(showcase_params, grid256, m)
            lam_cont = dispersion_benney(k, showcase_params)
            err = abs(lam_disc - lam_cont)
        else:
            lam_disc = wr_mode_eigenvalues(showcase_params, grid256, m)[0]
            lam_cont = dispersion_wr(k, showcase_params)[0]
            err = abs(lam_disc - lam_cont)
        # second-order stencils: relative error ~ (k dx)^2 / 6
        bound = 2.0 * (k * grid256.spacing) ** 2 * max(abs(lam_cont), 1.0)
        assert err < bound


def test_symbol_matches_dense_eigensolver(grid256, showcase_params):
    # circulant cross-check demanded of any eigenvalue computation
    jac = build_jacobian("benney", showcase_params, grid256)
    dense = np.linalg.eigvals(jac)
    for m in (0, 1, 2, 5, 9):
        lam = benney_mode_eigenvalue(showcase_params, grid256, m)
        assert np.min(np.abs(dense - lam)) < 1e-8 * max(1.0, abs(lam))


def test_dispersion_benney_values(showcase_params):
    assert dispersion_benney(0.0, showcase_params) == 0.0
    k0 = critical_wavenumber(showcase_params)
    assert abs(dispersion_benney(k0, showcase_params).real) < 1e-12
    lam = dispersion_benney(0.3, showcase_params)
    assert lam.real == pytest.approx(RE_LAMBDA_AT_03, rel=1e-12)
    assert lam.imag == pytest.approx(-0.6, rel=1e-12)


def test_dispersion_benney_ode_oracle(showcase_params):
    """Time-integrate the discretised linear equation for a single mode and
    fit the growth rate; the operator is stiff so an implicit method is
    required. The fitted rate must approach the formula as the grid refines."""
    from scipy.integrate import solve_ivp

    grid = Grid(512, 30.0)
    m = 2  # k = 2 pi m / L = 0.419, inside the unstable band
    k = 2.0 * np.pi * m / grid.aspect
    jac = build_jacobian("benney", showcase_params, grid)
    u0 = np.cos(k * grid.coordinates)
    sol = solve_ivp(lambda t, u: jac @ u, (0.0, 2.0), u0, method="BDF",
                    jac=lambda t, u: jac, rtol=1e-9, atol=1e-12,
                    t_eval=(0.0, 2.0))
    amp = np.abs(np.fft.rfft(sol.y[:, 1])[m]) / np.abs(np.fft.rfft(u0)[m])
    fitted = math.log(amp) / 2.0
    assert fitted == pytest.approx(dispersion_benney(k, showcase_params).real, rel=2e-3)


def test_dispersion_wr_roots(showcase_params):
    re = showcase_params.reynolds
    l1, l2 = dispersion_wr(0.0, showcase_params)
    assert l1 == 0.0
    assert l2 == pytest.approx(-5.0 / (2.0 * re), rel=1e-14)
    for k in (0.1, 0.3, 0.5850341640289373, 1.0, 2.5):
        roots = dispersion_wr(k, showcase_params)
        assert roots[0].real >= roots[1].real
        b = 5.0 / (2.0 * re) + 34.0j * k / 21.0
        c = (5.0j * k / re
             - (4.0 / 7.0 - 5.0 * showcase_params.cot_theta / (3.0 * re)) * k * k
             + 5.0 * k ** 4 / (6.0 * re * showcase_params.capillary))
        for lam in roots:
            assert abs(lam * lam + b * lam + c) < 1e-10 * max(1.0, abs(c))


def test_critical_wavenumber_values(showcase_params):
    assert critical_wavenumber(showcase_params) == pytest.approx(K0_SHOWCASE, rel=1e-12)
    water = FlowParameters(28.2, 0.0018)
    assert critical_wavenumber(water) == pytest.approx(K0_WATER_TABLE, rel=1e-12)


def _bisect_growth_sign(params, lo=1e-8, hi=5.0, steps=200):
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if dispersion_benney(mid, params).real > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_critical_wavenumber_bisection_oracle(showcase_params):
    assert _bisect_growth_sign(showcase_params) == pytest.approx(K0_SHOWCASE, abs=1e-10)


def test_critical_wavenumber_threshold():
    theta = math.pi / 3
    ct = math.cos(theta) / math.sin(theta)
    re_c = 1.25 * ct
    assert critical_wavenumber(FlowParameters(re_c * (1 - 1e-9), 0.05, theta)) == 0.0
    assert critical_wavenumber(FlowParameters(re_c * (1 + 1e-9), 0.05, theta)) > 0.0
    # bisect the transition point in Re
    lo, hi = 0.5 * re_c, 2.0 * re_c
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if critical_wavenumber(FlowParameters(mid, 0.05, theta)) > 0:
            hi = mid
        else:
            lo = mid
    assert 0.5 * (lo + hi) == pytest.approx(re_c, rel=1e-12)


def test_shared_critical_wavenumber_between_models(showcase_params):
    # bisection on the dominant two-field root crosses at the same k0
    lo, hi = 1e-6, 5.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dispersion_wr(mid, showcase_params)[0].real > 0:
            lo = mid
        else:
            hi = mid
    assert 0.5 * (lo + hi) == pytest.approx(K0_SHOWCASE, abs=1e-8)


def test_count_unstable_modes(showcase_params):
    assert count_unstable_modes(showcase_params) == 5
    assert count_unstable_modes(FlowParameters(1.0, 0.05)) == 1
    assert count_unstable_modes(FlowParameters(0.5, 0.05)) == 1  # linearly stable


@pytest.mark.parametrize("model", ["benney", "wr"])
@pytest.mark.parametrize("re", [1.0, 5.0])
def test_unstable_mode_count_matches_eigenvalues(model, re, grid256):
    params = FlowParameters(re, 0.05)
    assert count_unstable_eigenvalues(model, params, grid256) == count_unstable_modes(params)


def test_real_fourier_basis_orthonormal():
    q = real_fourier_basis(64)
    np.testing.assert_allclose(q.T @ q, np.eye(64), atol=1e-13)


def test_wr_artifact_mode_is_exactly_neutral(grid256, showcase_params):
    jac = build_jacobian("wr", showcase_params, grid256)
    right, left = wr_artifact_vectors(grid256)
    assert np.max(np.abs(jac @ right)) < 1e-13
    assert np.max(np.abs(left @ jac)) < 1e-13
    # the deflated spectrum drops exactly one near-zero eigenvalue
    full = np.linalg.eigvals(jac)
    deflated = wr_deflated_eigenvalues(jac, grid256)
    assert np.sum(np.abs(full) < 1e-8) == 2       # mass mode + artifact
    assert np.sum(np.abs(deflated) < 1e-8) == 1   # mass mode only


def test_unstable_modes_listing(grid256, showcase_params):
    modes = unstable_modes("benney", showcase_params, grid256)
    assert modes == [0, 1, 2]
    assert 1 + 2 * (len(modes) - 1) == count_unstable_modes(showcase_params)
