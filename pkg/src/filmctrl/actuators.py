"""Periodic basal actuators: bump shape, normalization, forcing assembly and
the linearised actuation matrices for both reduced-order models.

Each actuator injects/removes fluid through a smooth periodic bump

    d(x) = A exp[(cos(2 pi x / L) - 1) / omega^2],

where omega sets the width and A normalises the integral of d over one period
to 1. A is computed by trapezoid quadrature on the simulation grid so that the
same discrete normalization enters the forcing and the actuation matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import FlowParameters, Grid

DEFAULT_WIDTH = 0.1


@dataclass(frozen=True)
class ActuatorConfig:
    """Placement and shape of M evenly spaced basal actuators."""

    count: int
    width: float
    aspect: float
    positions: np.ndarray
    amplitude: float  # normalization A of the bump

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"actuator count must be >= 1, got {self.count}")
        if not self.width > 0:
            raise ValueError(f"actuator width must be positive, got {self.width}")
        pos = np.asarray(self.positions, dtype=float)
        if pos.shape != (self.count,):
            raise ValueError("positions must have one entry per actuator")
        if np.any(pos < 0) or np.any(pos >= self.aspect):
            raise ValueError("positions must lie in [0, aspect)")
        gaps = np.diff(pos)
        if self.count > 1:
            if np.any(gaps <= 0):
                raise ValueError("positions must be strictly increasing")
            if not np.allclose(gaps, self.aspect / self.count, rtol=0, atol=1e-9):
                raise ValueError("positions must be evenly spaced at aspect/count")
        object.__setattr__(self, "positions", pos)


def default_positions(count: int, aspect: float) -> np.ndarray:
    """Cell-centered even spacing, x_i = (i - 1/2) L / M."""
    return (np.arange(count) + 0.5) * (aspect / count)


def make_actuators(count: int, width: float, grid: Grid,
                   positions: np.ndarray | None = None) -> ActuatorConfig:
    """Build an actuator layout with A from trapezoid quadrature on ``grid``."""
    if count < 1:
        raise ValueError(f"actuator count must be >= 1, got {count}")
    if not width > 0:
        raise ValueError(f"actuator width must be positive, got {width}")
    if positions is None:
        positions = default_positions(count, grid.aspect)
    raw = np.exp((np.cos(2.0 * np.pi * grid.coordinates / grid.aspect) - 1.0) / width ** 2)
    amplitude = 1.0 / (float(np.sum(raw)) * grid.spacing)
    return ActuatorConfig(count, width, grid.aspect, np.asarray(positions, float), amplitude)


def bump(x, config: ActuatorConfig):
    """Evaluate the normalised actuator bump at position(s) x (periodic in L)."""
    x = np.asarray(x, dtype=float)
    return config.amplitude * np.exp(
        (np.cos(2.0 * np.pi * x / config.aspect) - 1.0) / config.width ** 2)


def actuator_columns(config: ActuatorConfig, grid: Grid) -> np.ndarray:
    """N x M matrix whose column i samples d(x - x_i) on the grid."""
    offsets = grid.coordinates[:, None] - config.positions[None, :]
    return bump(offsets, config)


def assemble_forcing(u, config: ActuatorConfig, grid: Grid) -> np.ndarray:
    """Forcing f_j = sum_i u_i d(x_j - x_i); linear in the amplitudes u."""
    u = np.asarray(u, dtype=float)
    if u.shape != (config.count,):
        raise ValueError(f"expected {config.count} control amplitudes, got shape {u.shape}")
    return actuator_columns(config, grid) @ u


def actuator_matrix(model: str, params: FlowParameters, config: ActuatorConfig,
                    grid: Grid) -> np.ndarray:
    """Linearised actuation matrix Psi.

    For the single-field model the forcing enters the height equation both
    directly and through the inertial correction of the flux, giving columns
    d_i + (2 Re / 3) D1 d_i. For the two-field model the forcing acts on the
    height equation with the bump and on the flux equation with bump / 3,
    stacked as [d_i; d_i / 3].
    """
    from .linear import build_diff_ops  # local import to avoid a cycle

    cols = actuator_columns(config, grid)
    if model == "benney":
        d1 = build_diff_ops(grid).d1
        return cols + (2.0 * params.reynolds / 3.0) * (d1 @ cols)
    if model == "wr":
        return np.vstack([cols, cols / 3.0])
    raise ValueError(f"unknown model {model!r}; expected 'benney' or 'wr'")
