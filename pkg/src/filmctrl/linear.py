"""Periodic finite-difference operators, model Jacobians, and the analytic
dispersion relations of the two reduced-order models.

The single-field (Benney-type) linearisation is

    dh/dt = [-2 D1 + (2 cot(theta)/3 - 8 Re/15) D2 - 1/(3 Ca) D4] h,

and the two-field (weighted-residual) linearisation couples height and flux:

    dh/dt = -D1 q,
    dq/dt = [5/Re + (4/7 - 5 cot(theta)/(3 Re)) D1 + 5/(6 Re Ca) D3] h
            - [5/(2 Re) + (34/21) D1] q.

All operators use second-order central stencils on the periodic grid.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .flow import FlowParameters, Grid

#: Central second-order stencils, offset -> coefficient (before 1/dx^p scaling).
STENCIL_D1 = {-1: -0.5, 1: 0.5}
STENCIL_D2 = {-1: 1.0, 0: -2.0, 1: 1.0}
STENCIL_D3 = {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5}
STENCIL_D4 = {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0}


def _circulant(n: int, stencil: dict, scale: float) -> np.ndarray:
    out = np.zeros((n, n))
    idx = np.arange(n)
    for offset, coeff in stencil.items():
        out[idx, (idx + offset) % n] = coeff * scale
    return out


@dataclass(frozen=True)
class DiffOps:
    """Dense periodic differentiation matrices d/dx ... d^4/dx^4."""

    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray


def build_diff_ops(grid: Grid) -> DiffOps:
    dx = grid.spacing
    return DiffOps(
        d1=_circulant(grid.n, STENCIL_D1, 1.0 / dx),
        d2=_circulant(grid.n, STENCIL_D2, 1.0 / dx ** 2),
        d3=_circulant(grid.n, STENCIL_D3, 1.0 / dx ** 3),
        d4=_circulant(grid.n, STENCIL_D4, 1.0 / dx ** 4),
    )


def build_jacobian(model: str, params: FlowParameters, grid: Grid,
                   ops: DiffOps | None = None) -> np.ndarray:
    """Discretised linear operator: N x N for 'benney', 2N x 2N for 'wr'
    (block state ordering [h; q])."""
    if ops is None:
        ops = build_diff_ops(grid)
    re = params.reynolds
    ct = params.cot_theta
    ca = params.capillary
    if model == "benney":
        return (-2.0 * ops.d1
                + (2.0 * ct / 3.0 - 8.0 * re / 15.0) * ops.d2
                - (1.0 / (3.0 * ca)) * ops.d4)
    if model == "wr":
        n = grid.n
        eye = np.eye(n)
        top = np.hstack([np.zeros((n, n)), -ops.d1])
        lower_left = ((5.0 / re) * eye
                      + (4.0 / 7.0 - 5.0 * ct / (3.0 * re)) * ops.d1
                      + (5.0 / (6.0 * re * ca)) * ops.d3)
        lower_right = -(5.0 / (2.0 * re)) * eye - (34.0 / 21.0) * ops.d1
        return np.vstack([top, np.hstack([lower_left, lower_right])])
    raise ValueError(f"unknown model {model!r}; expected 'benney' or 'wr'")


@dataclass(frozen=True)
class LinearSystem:
    """Jacobian, actuation matrix and (identity) observation for one model."""

    jacobian: np.ndarray
    actuation: np.ndarray
    model: str
    params: FlowParameters
    grid: Grid

    def __post_init__(self):
        dim = self.jacobian.shape[0]
        expected = grid_state_dim(self.model, self.grid)
        if self.jacobian.shape != (dim, dim) or dim != expected:
            raise ValueError("jacobian has inconsistent dimensions for the model")
        if self.actuation.shape[0] != dim:
            raise ValueError("actuation matrix rows must match the state dimension")

    @property
    def state_dim(self) -> int:
        return self.jacobian.shape[0]

    @property
    def observation(self) -> np.ndarray:
        """Full observations: the identity matrix."""
        return np.eye(self.state_dim)


def grid_state_dim(model: str, grid: Grid) -> int:
    if model == "benney":
        return grid.n
    if model == "wr":
        return 2 * grid.n
    raise ValueError(f"unknown model {model!r}")


def build_linear_system(model: str, params: FlowParameters, config, grid: Grid) -> LinearSystem:
    """Assemble (J, Psi) for a model, parameter set and actuator layout."""
    from .actuators import actuator_matrix

    jac = build_jacobian(model, params, grid)
    psi = actuator_matrix(model, params, config, grid)
    return LinearSystem(jac, psi, model, params, grid)


# ---------------------------------------------------------------------------
# Analytic dispersion relations
# ---------------------------------------------------------------------------

def dispersion_benney(k: float, params: FlowParameters) -> complex:
    """Single eigenvalue of the linearised single-field model at wavenumber k."""
    re, ct, ca = params.reynolds, params.cot_theta, params.capillary
    return (-2.0j * k
            + (8.0 * re / 15.0 - 2.0 * ct / 3.0 - k * k / (3.0 * ca)) * k * k)


def dispersion_wr(k: float, params: FlowParameters) -> tuple[complex, complex]:
    """Both roots of the two-field quadratic at wavenumber k, dominant first.

    lambda^2 + (5/(2 Re) + 34 i k / 21) lambda
             + (5 i k / Re - [4/7 - 5 cot(theta)/(3 Re)] k^2
                + 5 k^4 / (6 Re Ca)) = 0
    """
    re, ct, ca = params.reynolds, params.cot_theta, params.capillary
    b = 5.0 / (2.0 * re) + 34.0j * k / 21.0
    c = (5.0j * k / re
         - (4.0 / 7.0 - 5.0 * ct / (3.0 * re)) * k * k
         + 5.0 * k ** 4 / (6.0 * re * ca))
    disc = cmath.sqrt(b * b - 4.0 * c)
    lam1 = 0.5 * (-b + disc)
    lam2 = 0.5 * (-b - disc)
    if lam2.real > lam1.real:
        lam1, lam2 = lam2, lam1
    return lam1, lam2


def critical_wavenumber(params: FlowParameters) -> float:
    """Neutral wavenumber k0 = sqrt(Ca (8 Re / 5 - 2 cot theta)); 0 when the
    film is linearly stable."""
    radicand = params.capillary * (8.0 * params.reynolds / 5.0 - 2.0 * params.cot_theta)
    if radicand <= 0.0:
        return 0.0
    return math.sqrt(radicand)


def count_unstable_modes(params: FlowParameters) -> int:
    """Number of non-decaying Fourier modes on the periodic domain:
    the zero (mass) mode plus one pair per grid wavenumber below k0."""
    k0 = critical_wavenumber(params)
    return 1 + 2 * int(math.floor(params.aspect / (2.0 * math.pi) * k0))


# ---------------------------------------------------------------------------
# Discrete symbols and the real Fourier basis
# ---------------------------------------------------------------------------

def _stencil_symbol(stencil: dict, phi: float, scale: float) -> complex:
    return scale * sum(c * cmath.exp(1j * o * phi) for o, c in stencil.items())


def discrete_symbols(grid: Grid, m: int) -> tuple[complex, complex, complex, complex]:
    """Fourier symbols of (D1, D2, D3, D4) at integer grid mode m."""
    dx = grid.spacing
    phi = 2.0 * math.pi * m / grid.n
    return (
        _stencil_symbol(STENCIL_D1, phi, 1.0 / dx),
        _stencil_symbol(STENCIL_D2, phi, 1.0 / dx ** 2),
        _stencil_symbol(STENCIL_D3, phi, 1.0 / dx ** 3),
        _stencil_symbol(STENCIL_D4, phi, 1.0 / dx ** 4),
    )


def benney_mode_eigenvalue(params: FlowParameters, grid: Grid, m: int) -> complex:
    """Exact eigenvalue of the discretised single-field operator at mode m."""
    s1, s2, _, s4 = discrete_symbols(grid, m)
    re, ct, ca = params.reynolds, params.cot_theta, params.capillary
    return -2.0 * s1 + (2.0 * ct / 3.0 - 8.0 * re / 15.0) * s2 - s4 / (3.0 * ca)


def wr_mode_matrix(params: FlowParameters, grid: Grid, m: int) -> np.ndarray:
    """2 x 2 complex block of the discretised two-field operator at mode m."""
    s1, _, s3, _ = discrete_symbols(grid, m)
    re, ct, ca = params.reynolds, params.cot_theta, params.capillary
    return np.array([
        [0.0, -s1],
        [5.0 / re + (4.0 / 7.0 - 5.0 * ct / (3.0 * re)) * s1 + 5.0 * s3 / (6.0 * re * ca),
         -5.0 / (2.0 * re) - 34.0 * s1 / 21.0],
    ], dtype=complex)


def wr_mode_eigenvalues(params: FlowParameters, grid: Grid, m: int) -> np.ndarray:
    w = np.linalg.eigvals(wr_mode_matrix(params, grid, m))
    return w[np.argsort(-w.real)]


def real_fourier_basis(n: int) -> np.ndarray:
    """Orthonormal real Fourier basis as columns: constant, then
    (cos, sin) pairs for modes 1 .. n/2 - 1, then the Nyquist mode."""
    q = np.empty((n, n))
    j = np.arange(n)
    q[:, 0] = 1.0 / math.sqrt(n)
    for m in range(1, n // 2):
        ang = 2.0 * math.pi * m * j / n
        q[:, 2 * m - 1] = math.sqrt(2.0 / n) * np.cos(ang)
        q[:, 2 * m] = math.sqrt(2.0 / n) * np.sin(ang)
    q[:, n - 1] = np.where(j % 2 == 0, 1.0, -1.0) / math.sqrt(n)
    return q


def fourier_mode_columns(n: int, m: int) -> list[int]:
    """Column indices of mode m within ``real_fourier_basis(n)``."""
    if m == 0:
        return [0]
    if m == n // 2:
        return [n - 1]
    return [2 * m - 1, 2 * m]


def unstable_modes(model: str, params: FlowParameters, grid: Grid,
                   tol: float = 1e-10) -> list[int]:
    """Grid modes whose discretised eigenvalue has real part > -tol.

    Mode 0 (conserved mass) always qualifies. The returned list contains
    non-negative mode indices; each m > 0 stands for the +/- m pair. For the
    two-field model the Nyquist mode is excluded: it is the structurally
    decoupled grid artifact handled by the deflation helpers below.
    """
    top = grid.n // 2 + 1 if model == "benney" else grid.n // 2
    out = []
    for m in range(top):
        if model == "benney":
            growth = benney_mode_eigenvalue(params, grid, m).real
        else:
            growth = float(wr_mode_eigenvalues(params, grid, m)[0].real)
        if growth > -tol:
            out.append(m)
    return out


# ---------------------------------------------------------------------------
# The two-field grid artifact
# ---------------------------------------------------------------------------
#
# The central first-derivative stencil annihilates the Nyquist sawtooth, so
# the discretised two-field operator carries one exactly neutral mode, the
# height sawtooth with its slaved flux (q = 2 h): smooth basal actuators
# cannot reach it (its forcing coefficient is at aliasing level, ~1e-15), and
# with a positive-definite state weight the Riccati equation then has no
# solution at all. The helpers below (i) relocate that single eigenvalue to
# the damping rate of its flux partner by a rank-one update that leaves every
# other eigenvalue untouched (right/left eigenvector bi-orthogonality), and
# (ii) provide the orthogonal reflection used to exclude the artifact
# direction when reporting closed-loop spectra.

def wr_artifact_vectors(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """(right, left) null vectors of the artifact mode in [h; q] ordering."""
    saw = np.where(np.arange(grid.n) % 2 == 0, 1.0, -1.0)
    right = np.concatenate([saw, 2.0 * saw])
    left = np.concatenate([saw, np.zeros(grid.n)])
    return right, left


def wr_regularize_jacobian(jacobian: np.ndarray, params: FlowParameters,
                           grid: Grid) -> np.ndarray:
    """Relocate the artifact eigenvalue from 0 to -5/(2 Re)."""
    right, left = wr_artifact_vectors(grid)
    mu = 5.0 / (2.0 * params.reynolds)
    return jacobian - (mu / (left @ right)) * np.outer(right, left)


def _wr_artifact_reflector(grid: Grid) -> np.ndarray:
    """Householder reflection mapping the height-sawtooth unit vector onto
    the first coordinate of the [h; q] state."""
    _, left = wr_artifact_vectors(grid)
    e = left / np.linalg.norm(left)
    u = e.copy()
    u[0] -= 1.0
    norm2 = u @ u
    n2 = 2 * grid.n
    if norm2 < 1e-30:  # already aligned with the first coordinate
        return np.eye(n2)
    return np.eye(n2) - (2.0 / norm2) * np.outer(u, u)


def wr_deflate(a: np.ndarray, grid: Grid,
               vec: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray | None]:
    """Reflect the artifact direction onto the first coordinate and drop it.

    Returns the (2N-1) x (2N-1) block representing the physically forceable
    subsystem, plus ``vec`` carried through the same change of basis.
    """
    h = _wr_artifact_reflector(grid)
    a_defl = (h @ a @ h)[1:, 1:]
    if vec is None:
        return a_defl, None
    return a_defl, (h @ vec)[1:]


def wr_deflated_eigenvalues(a: np.ndarray, grid: Grid) -> np.ndarray:
    """Eigenvalues of a 2N matrix with the artifact direction reflected out."""
    a_defl, _ = wr_deflate(a, grid)
    return np.linalg.eigvals(a_defl)


def count_unstable_eigenvalues(model: str, params: FlowParameters, grid: Grid,
                               tol: float = 1e-10,
                               jacobian: np.ndarray | None = None) -> int:
    """Count Jacobian eigenvalues with real part > -tol (mass mode included;
    the two-field artifact mode excluded)."""
    if jacobian is None:
        jacobian = build_jacobian(model, params, grid)
    if model == "wr":
        w = wr_deflated_eigenvalues(jacobian, grid)
    else:
        w = np.linalg.eigvals(jacobian)
    return int(np.sum(w.real > -tol))
