"""LQR synthesis: cost matrices, Riccati solvers, gain assembly, closed-loop
spectra, and controllability/stabilisability diagnostics.

The optimal full-state feedback u = K h for

    dh/dt = J h + Psi u,   cost = integral h' U h + u' V u dt

is K = -V^{-1} Psi' P with P the stabilising solution of the continuous
algebraic Riccati equation

    J' P + P J + U - P Psi V^{-1} Psi' P = 0.

Two solution routes are implemented: the primary one extracts the stable
invariant subspace of the 2n x 2n Hamiltonian via an ordered real Schur
decomposition; the classical eigenvector method is retained as a cross-check
and fallback. Scaling both cost matrices by a common factor leaves K
unchanged, so a single weight ratio beta parameterises the cost space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .actuators import ActuatorConfig
from .errors import (IllConditionedError, InsufficientActuatorsError,
                     NonStabilisableError)
from .flow import FlowParameters, Grid
from .linear import (LinearSystem, fourier_mode_columns, real_fourier_basis,
                     unstable_modes)

#: Numerical-rank tolerance relative to the largest singular value.
RANK_RTOL = 1e-10

#: Acceptable relative Frobenius residual of a Riccati solve.
CARE_RESIDUAL_RTOL = 1e-8


@dataclass(frozen=True)
class CostWeights:
    """Diagonal cost matrices U = (beta L / N) I and V = (1 - beta) I."""

    beta: float
    u_diag: np.ndarray
    v_diag: np.ndarray

    @property
    def u_matrix(self) -> np.ndarray:
        return np.diag(self.u_diag)

    @property
    def v_matrix(self) -> np.ndarray:
        return np.diag(self.v_diag)


def cost_weights(beta: float, grid: Grid, m: int, state_dim: int | None = None) -> CostWeights:
    """Discrete analogue of the continuous cost: state entries beta L / N
    (one per state component), control entries 1 - beta."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if state_dim is None:
        state_dim = grid.n
    u_entry = beta * grid.aspect / grid.n
    return CostWeights(beta,
                       np.full(state_dim, u_entry),
                       np.full(m, 1.0 - beta))


@dataclass(frozen=True)
class GainMatrix:
    """Feedback gain with its synthesis provenance."""

    k: np.ndarray
    model: str
    params: FlowParameters
    beta: float
    count: int
    width: float
    n: int
    solver: str
    reduced: bool = False

    def __post_init__(self):
        k = np.atleast_2d(np.asarray(self.k, dtype=float))
        if k.shape[0] != self.count:
            raise ValueError("gain row count must equal the actuator count")
        if not np.all(np.isfinite(k)):
            raise ValueError("gain entries must be finite")
        object.__setattr__(self, "k", k)


@dataclass(frozen=True)
class ClosedLoop:
    """Controlled system matrix A = J + Psi K Phi and its spectrum."""

    a: np.ndarray
    eigenvalues: np.ndarray

    @property
    def spectral_abscissa(self) -> float:
        return float(np.max(self.eigenvalues.real))


# ---------------------------------------------------------------------------
# Riccati solvers
# ---------------------------------------------------------------------------

def _hamiltonian(a, b, u, v_diag):
    bvb = (b / v_diag) @ b.T
    return np.block([[a, -bvb], [-u, -a.T]])


def _split_threshold(eigenvalues, n, axis_tol=1e-9):
    """Real-part threshold separating the n stable-side Hamiltonian
    eigenvalues from the n anti-stable ones.

    The Hamiltonian spectrum is symmetric about the imaginary axis, so the n
    smallest real parts form the stable side; a pair pinned to the axis
    (within tolerance) means no stabilising solution exists.
    """
    re = np.sort(eigenvalues.real)
    lo, hi = re[n - 1], re[n]
    scale = 1.0 + float(np.median(np.abs(eigenvalues)))
    if abs(lo) <= axis_tol * scale and abs(hi) <= axis_tol * scale:
        raise NonStabilisableError(
            f"Hamiltonian eigenvalues within {max(abs(lo), abs(hi)):.3e} of the "
            "imaginary axis; (J, Psi) is not stabilisable at this tolerance")
    if lo >= hi:
        raise NonStabilisableError(
            "Hamiltonian spectrum cannot be split into stable and anti-stable halves")
    return 0.5 * (lo + hi)


def _subspace_to_p(x1, x2):
    # P = x2 x1^{-1}; guard against a near-singular basis before solving.
    sv = np.linalg.svd(x1, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise IllConditionedError(
            f"invariant-subspace basis nearly singular (cond ~ {sv[0] / sv[-1]:.3e})")
    p = np.linalg.solve(x1.T, x2.T).T
    return 0.5 * (p + p.T)


def _care_schur(a, b, u, v_diag):
    n = a.shape[0]
    ham = _hamiltonian(a, b, u, v_diag)
    c = _split_threshold(np.linalg.eigvals(ham), n)
    t, z, sdim = scipy.linalg.schur(ham, output="real",
                                    sort=lambda re, im: re < c)
    if sdim != n:
        raise NonStabilisableError(
            f"stable invariant subspace has dimension {sdim}, expected {n}")
    return _subspace_to_p(z[:n, :n], z[n:, :n])


def _care_eig(a, b, u, v_diag):
    n = a.shape[0]
    ham = _hamiltonian(a, b, u, v_diag)
    w, vecs = np.linalg.eig(ham)
    _split_threshold(w, n)
    order = np.argsort(w.real)
    x = vecs[:, order[:n]]
    p = _subspace_to_p(x[:n, :], x[n:, :])
    if np.max(np.abs(p.imag)) > 1e-8 * max(np.max(np.abs(p.real)), 1.0):
        raise IllConditionedError("eigenvector method produced a significantly complex P")
    return p.real


def care_residual(p, a, b, u, v_diag) -> float:
    """Frobenius norm of J'P + PJ + U - P Psi V^{-1} Psi' P."""
    res = a.T @ p + p @ a + u - p @ ((b / v_diag) @ (b.T @ p))
    return float(np.linalg.norm(res))


def _refine_care(p, a, b, u, v_diag, max_steps=3):
    """Newton-Kleinman defect correction: each step solves the Lyapunov
    equation A_cl' D + D A_cl = -residual and adds D, polishing the
    invariant-subspace solution to near machine accuracy."""
    g = (b / v_diag) @ b.T
    best, best_res = p, care_residual(p, a, b, u, v_diag)
    for _ in range(max_steps):
        res = a.T @ best + best @ a + u - best @ g @ best
        a_cl = a - g @ best
        try:
            delta = scipy.linalg.solve_continuous_lyapunov(a_cl.T, -res)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
            break
        cand = best + 0.5 * (delta + delta.T)
        cand_res = care_residual(cand, a, b, u, v_diag)
        if not np.isfinite(cand_res) or cand_res >= best_res:
            break
        best, best_res = cand, cand_res
        if cand_res <= 1e-13 * (1.0 + np.linalg.norm(best)):
            break
    return best


def _solve_care_arrays(a, b, u, v_diag, method="auto"):
    """Returns (P, method_used). Retries the alternate method on failure."""
    routes = {"schur": _care_schur, "eig": _care_eig}
    if method == "auto":
        order = ["schur", "eig"]
    elif method in routes:
        order = [method]
    else:
        raise ValueError(f"unknown CARE method {method!r}")

    last_error = None
    for name in order:
        try:
            p = routes[name](a, b, u, v_diag)
        except NonStabilisableError:
            raise
        except (IllConditionedError, np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            last_error = exc
            continue
        p = _refine_care(p, a, b, u, v_diag)
        resid = care_residual(p, a, b, u, v_diag)
        if resid > CARE_RESIDUAL_RTOL * (1.0 + np.linalg.norm(p)):
            last_error = IllConditionedError(
                f"CARE residual {resid:.3e} above tolerance with method {name!r}")
            continue
        min_eig = float(np.min(np.linalg.eigvalsh(p)))
        if min_eig < -1e-8 * max(float(np.linalg.norm(p, 2)), 1.0):
            last_error = IllConditionedError(
                f"Riccati solution not positive semi-definite (min eig {min_eig:.3e})")
            continue
        return p, name
    raise last_error if last_error is not None else IllConditionedError("CARE solve failed")


def _synthesis_jacobian(system: LinearSystem) -> np.ndarray:
    """Jacobian used for Riccati synthesis.

    For the two-field model the structurally unreachable neutral grid mode
    (see ``linear.wr_regularize_jacobian``) makes the raw CARE unsolvable, so
    its single eigenvalue is relocated first; every other eigenvalue, and
    hence the resulting feedback on every forceable mode, is unchanged.
    """
    if system.model == "wr":
        from .linear import wr_regularize_jacobian
        return wr_regularize_jacobian(system.jacobian, system.params, system.grid)
    return system.jacobian


def solve_care(system: LinearSystem, weights: CostWeights, method: str = "auto") -> np.ndarray:
    """Stabilising solution P of the CARE for (J, Psi) with diagonal costs."""
    p, _ = _solve_care_arrays(_synthesis_jacobian(system), system.actuation,
                              weights.u_matrix, weights.v_diag, method)
    return p


def gain(p: np.ndarray, system: LinearSystem, weights: CostWeights,
         solver: str = "schur") -> GainMatrix:
    """Optimal feedback K = -V^{-1} Psi' P for a Riccati solution P."""
    k = -(system.actuation.T @ p) / weights.v_diag[:, None]
    m = system.actuation.shape[1]
    return GainMatrix(k, system.model, system.params, weights.beta,
                      m, float("nan"), system.grid.n, solver)


def synthesize_gain(system: LinearSystem, weights: CostWeights,
                    config: ActuatorConfig | None = None,
                    method: str = "auto") -> GainMatrix:
    """Solve the CARE and assemble the gain with full metadata."""
    p, used = _solve_care_arrays(_synthesis_jacobian(system), system.actuation,
                                 weights.u_matrix, weights.v_diag, method)
    g = gain(p, system, weights, solver=used)
    if config is not None:
        g = replace(g, width=config.width)
    return g


def reduce_wr_gain(g: GainMatrix) -> GainMatrix:
    """Fold the flux columns into the height columns using the leading-order
    flux slaving q = 2 h: K_eff = K_h + 2 K_q."""
    if g.model != "wr" or g.reduced:
        raise ValueError("expected an unreduced two-field gain")
    n = g.k.shape[1] // 2
    if g.k.shape[1] != 2 * n or n != g.n:
        raise ValueError("gain column count inconsistent with a 2N-state synthesis")
    k_eff = g.k[:, :n] + 2.0 * g.k[:, n:]
    return replace(g, k=k_eff, reduced=True)


def deployment_gain(g: GainMatrix) -> np.ndarray:
    """M x N gain acting on height deviations only."""
    if g.k.shape[1] == g.n:
        return g.k
    if g.k.shape[1] == 2 * g.n:
        return reduce_wr_gain(g).k
    raise ValueError("gain columns match neither N nor 2N")


def closed_loop(system: LinearSystem, g: GainMatrix | np.ndarray) -> ClosedLoop:
    """Assemble A = J + Psi K Phi and its spectrum.

    A height-only gain (N columns) pairs with the 2N two-field system through
    the observation restriction [I 0]; a full 2N gain pairs with the N-state
    single-field system through the flux slaving q = 2 h. For the two-field
    system the reported spectrum excludes the structurally decoupled grid
    artifact mode, which no basal forcing can move off zero.
    """
    a = _assemble_closed_loop(system, g)
    if system.model == "wr":
        from .linear import wr_deflated_eigenvalues
        return ClosedLoop(a, wr_deflated_eigenvalues(a, system.grid))
    return ClosedLoop(a, np.linalg.eigvals(a))


def _assemble_closed_loop(system: LinearSystem, g) -> np.ndarray:
    k = g.k if isinstance(g, GainMatrix) else np.atleast_2d(np.asarray(g, dtype=float))
    dim = system.state_dim
    n = system.grid.n
    cols = k.shape[1]
    if cols == dim:
        return system.jacobian + system.actuation @ k
    if cols == n and dim == 2 * n:
        a = system.jacobian.copy()
        a[:, :n] += system.actuation @ k
        return a
    if cols == 2 * n and dim == n:
        k_eff = k[:, :n] + 2.0 * k[:, n:]
        return system.jacobian + system.actuation @ k_eff
    raise ValueError(f"gain with {cols} columns cannot pair with state dimension {dim}")


def predicted_decay_rate(system: LinearSystem, g, mass_overlap_tol: float = 0.5) -> float:
    """Spectral abscissa over the closed-loop modes a mass-conserving run can
    excite.

    Spin-up from a zero-mean perturbation keeps the mean film height exactly
    one, and with evenly spaced actuators the feedback is mass-neutral to
    aliasing accuracy, so the relocated mass mode never appears in the decay
    data; the observable rate is the slowest of the remaining modes.
    """
    a = _assemble_closed_loop(system, g)
    n = system.grid.n
    if system.model == "wr":
        from .linear import wr_deflate
        const = np.concatenate([np.ones(n), np.zeros(n)]) / math.sqrt(n)
        a, const = wr_deflate(a, system.grid, const)
        const = const / np.linalg.norm(const)
    else:
        const = np.ones(n) / math.sqrt(n)
    w, v = np.linalg.eig(a)
    overlaps = np.abs(const @ v) / np.linalg.norm(v, axis=0)
    keep = overlaps < mass_overlap_tol
    if not np.any(keep):
        return float(np.max(w.real))
    return float(np.max(w[keep].real))


# ---------------------------------------------------------------------------
# Controllability and stabilisability diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ControllabilityReport:
    controllable: bool
    rank: int
    dim: int
    tol: float


def kalman_controllable(system: LinearSystem) -> ControllabilityReport:
    """Kalman rank test: rank [Psi, J Psi, ..., J^{n-1} Psi] == n.

    The controllability matrix is notoriously ill-conditioned as n grows;
    the numerical rank (singular values above RANK_RTOL * sigma_max) is
    reported rather than asserted.
    """
    a, b = system.jacobian, system.actuation
    n = a.shape[0]
    blocks = [b]
    for _ in range(n - 1):
        blocks.append(a @ blocks[-1])
    ctrb = np.hstack(blocks)
    sv = np.linalg.svd(ctrb, compute_uv=False)
    tol = RANK_RTOL * sv[0] if sv[0] > 0 else 0.0
    rank = int(np.sum(sv > tol))
    return ControllabilityReport(rank == n, rank, n, tol)


def stabilisable(system: LinearSystem, tol: float = 1e-10) -> bool:
    """Eigenvector (PBH) test on the non-decaying modes only: every
    eigenvalue of J with real part >= -tol must satisfy
    rank [J - lambda I, Psi] = n, i.e. no left eigenvector of J at lambda is
    orthogonal to the range of Psi."""
    a, b = system.jacobian, system.actuation
    n = a.shape[0]
    w = np.linalg.eigvals(a)
    unstable = w[w.real >= -tol]
    # cluster repeated eigenvalues so each one is tested once
    tested: list[complex] = []
    scale = max(float(np.max(np.abs(w))), 1.0)
    for lam in unstable:
        if any(abs(lam - t) <= 1e-8 * scale for t in tested):
            continue
        tested.append(complex(lam))
        shifted = a - lam * np.eye(n)
        multiplicity = int(np.sum(np.abs(w - lam) <= 1e-8 * scale))
        geo = n - np.linalg.matrix_rank(shifted, tol=RANK_RTOL * scale)
        if geo < multiplicity:
            warnings.warn(
                f"unstable eigenvalue {lam:.6g} is numerically defective "
                f"(geometric multiplicity {geo} < {multiplicity})",
                RuntimeWarning, stacklevel=2)
        pencil = np.hstack([shifted, b.astype(complex)])
        sv = np.linalg.svd(pencil, compute_uv=False)
        if sv[-1] <= RANK_RTOL * sv[0]:
            return False
    return True


# ---------------------------------------------------------------------------
# Fourier-restricted synthesis
# ---------------------------------------------------------------------------

def fourier_restricted_gain(system: LinearSystem, weights: CostWeights) -> GainMatrix:
    """LQR on the span of non-decaying Fourier modes only, lifted back to
    physical space with zero action on the decaying modes.

    Because the circulant Jacobian is block-diagonal in the Fourier basis,
    the resulting closed loop is block lower triangular: the decaying-mode
    eigenvalues of J are preserved exactly and only the non-decaying block is
    relocated. Requires at least as many actuators as non-decaying modes.
    """
    n = system.grid.n
    modes = unstable_modes(system.model, system.params, system.grid)
    basis = real_fourier_basis(n)
    cols = [c for m in modes for c in fourier_mode_columns(n, m)]
    n_u = len(cols)
    m_act = system.actuation.shape[1]

    if n_u == 0:
        k = np.zeros((m_act, system.state_dim))
        return GainMatrix(k, system.model, system.params, weights.beta,
                          m_act, float("nan"), n, "fourier")
    if m_act < n_u:
        raise InsufficientActuatorsError(
            f"{m_act} actuators cannot control {n_u} non-decaying modes")

    q_u = basis[:, cols]
    if system.state_dim == 2 * n:
        q_u = np.block([[q_u, np.zeros_like(q_u)],
                        [np.zeros_like(q_u), q_u]])
    j_u = q_u.T @ system.jacobian @ q_u
    psi_u = q_u.T @ system.actuation

    sv = np.linalg.svd(psi_u, compute_uv=False)
    if sv[0] == 0 or int(np.sum(sv > RANK_RTOL * sv[0])) < min(psi_u.shape):
        raise InsufficientActuatorsError(
            "restricted actuation matrix loses row rank for this placement")

    dim_u = q_u.shape[1]
    u_entry = weights.beta * system.grid.aspect / system.grid.n
    p_u, used = _solve_care_arrays(j_u, psi_u, u_entry * np.eye(dim_u), weights.v_diag)
    k_u = -(psi_u.T @ p_u) / weights.v_diag[:, None]
    k = k_u @ q_u.T
    return GainMatrix(k, system.model, system.params, weights.beta,
                      m_act, float("nan"), n, f"fourier-{used}")


# ---------------------------------------------------------------------------
# Gain persistence
# ---------------------------------------------------------------------------

GAIN_FORMAT_VERSION = 1


def save_gain(g: GainMatrix, path) -> None:
    """Write a self-describing text gain file; floats use shortest
    round-trip repr so reloading is bit-identical."""
    lines = [
        "# filmctrl gain file",
        f"format_version = {GAIN_FORMAT_VERSION}",
        f"model = {g.model}",
        f"solver = {g.solver}",
        f"reduced = {'true' if g.reduced else 'false'}",
        f"reynolds = {g.params.reynolds!r}",
        f"capillary = {g.params.capillary!r}",
        f"theta = {g.params.theta!r}",
        f"aspect = {g.params.aspect!r}",
        f"n = {g.n}",
        f"count = {g.count}",
        f"width = {g.width!r}",
        f"beta = {g.beta!r}",
        f"rows = {g.k.shape[0]}",
        f"cols = {g.k.shape[1]}",
        "k:",
    ]
    for row in g.k:
        lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_gain(path) -> GainMatrix:
    with open(path) as fh:
        raw = fh.read().splitlines()
    header: dict[str, str] = {}
    data_start = None
    for i, line in enumerate(raw):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if text == "k:":
            data_start = i + 1
            break
        key, _, value = text.partition("=")
        header[key.strip()] = value.strip()
    if data_start is None:
        raise ValueError(f"{path}: missing gain data section")
    version = int(header["format_version"])
    if version != GAIN_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported gain format version {version}")
    rows = int(header["rows"])
    cols = int(header["cols"])
    k = np.array([[float(v) for v in raw[data_start + r].split()] for r in range(rows)])
    if k.shape != (rows, cols):
        raise ValueError(f"{path}: gain data shape {k.shape} does not match header")
    params = FlowParameters(float(header["reynolds"]), float(header["capillary"]),
                            float(header["theta"]), float(header["aspect"]))
    return GainMatrix(k, header["model"], params, float(header["beta"]),
                      int(header["count"]), float(header["width"]),
                      int(header["n"]), header["solver"],
                      header["reduced"] == "true")
