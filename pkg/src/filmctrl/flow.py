"""Dimensionless flow parameters, physical fluid presets, the periodic grid,
and the interface state.

Everything downstream of this module works in dimensionless variables; the
only place physical units appear is the conversion from a ``PhysicalFluid``
to ``FlowParameters``. Lengths are scaled on the flat-film height, velocities
on the free-surface speed of the uniform film, so the base state is h = 1 with
flux 2/3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_THETA = math.pi / 3
DEFAULT_ASPECT = 30.0
DEFAULT_GRAVITY = 9.807
DEFAULT_FILM_HEIGHT = 175e-6

#: Dimensionless downstream flux of the uniform (Nusselt) film.
NUSSELT_FLUX = 2.0 / 3.0


@dataclass(frozen=True)
class FlowParameters:
    """Dimensionless numbers defining a film configuration."""

    reynolds: float
    capillary: float
    theta: float = DEFAULT_THETA
    aspect: float = DEFAULT_ASPECT

    def __post_init__(self):
        if not self.reynolds > 0:
            raise ValueError(f"reynolds must be positive, got {self.reynolds}")
        if not self.capillary > 0:
            raise ValueError(f"capillary must be positive, got {self.capillary}")
        if not 0 < self.theta < math.pi / 2:
            raise ValueError(f"theta must lie in (0, pi/2), got {self.theta}")
        if not self.aspect > 0:
            raise ValueError(f"aspect must be positive, got {self.aspect}")

    @property
    def cot_theta(self) -> float:
        return math.cos(self.theta) / math.sin(self.theta)


@dataclass(frozen=True)
class PhysicalFluid:
    """Dimensional fluid properties of the liquid phase."""

    density: float          # kg m^-3
    viscosity: float        # kg m^-1 s^-1
    surface_tension: float  # N m^-1
    film_height: float = DEFAULT_FILM_HEIGHT  # m
    gravity: float = DEFAULT_GRAVITY          # m s^-2
    theta: float = DEFAULT_THETA              # rad

    def __post_init__(self):
        for name in ("density", "viscosity", "surface_tension", "film_height", "gravity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.theta < math.pi / 2:
            raise ValueError(f"theta must lie in (0, pi/2), got {self.theta}")

    @property
    def surface_velocity(self) -> float:
        """Free-surface speed of the uniform film, rho g h^2 sin(theta) / (2 mu)."""
        return (self.density * self.gravity * self.film_height ** 2
                * math.sin(self.theta)) / (2.0 * self.viscosity)


def from_physical(fluid: PhysicalFluid, aspect: float = DEFAULT_ASPECT) -> FlowParameters:
    """Nondimensionalise a physical fluid: Re = rho U h / mu, Ca = mu U / gamma."""
    us = fluid.surface_velocity
    reynolds = fluid.density * us * fluid.film_height / fluid.viscosity
    capillary = fluid.viscosity * us / fluid.surface_tension
    return FlowParameters(reynolds, capillary, fluid.theta, aspect)


#: Named fluid configurations (density, viscosity, surface tension) at the
#: default 175 micron film height and pi/3 inclination.
PRESETS = {
    "water": PhysicalFluid(999.8, 8.91e-4, 0.072),
    "ethanol": PhysicalFluid(789.5, 1.06e-3, 0.022),
    "pentane": PhysicalFluid(626.0, 2.24e-4, 0.018),
    "nitrogen": PhysicalFluid(3.44, 6.88e-6, 0.0085),
}


def preset_parameters(name: str, aspect: float = DEFAULT_ASPECT) -> FlowParameters:
    """Resolve a preset fluid name to its dimensionless parameters."""
    try:
        fluid = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
    return from_physical(fluid, aspect)


class Grid:
    """Uniform periodic grid of n points on [0, aspect).

    Index arithmetic wraps mod n; coordinate i is exactly i * spacing.
    """

    __slots__ = ("n", "aspect", "spacing", "coordinates")

    def __init__(self, n: int = 256, aspect: float = DEFAULT_ASPECT):
        if n < 8 or n % 2 != 0:
            raise ValueError(f"grid size must be even and >= 8, got {n}")
        if not aspect > 0:
            raise ValueError(f"aspect must be positive, got {aspect}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "aspect", float(aspect))
        object.__setattr__(self, "spacing", float(aspect) / n)
        coords = self.spacing * np.arange(n)
        coords.flags.writeable = False
        object.__setattr__(self, "coordinates", coords)

    def __setattr__(self, name, value):
        raise AttributeError("Grid is immutable")

    def __repr__(self):
        return f"Grid(n={self.n}, aspect={self.aspect})"

    def __eq__(self, other):
        return isinstance(other, Grid) and self.n == other.n and self.aspect == other.aspect

    def __hash__(self):
        return hash((self.n, self.aspect))


@dataclass(frozen=True)
class InterfaceState:
    """Film height (and, for the two-field model, flux) sampled on the grid.

    Arrays are treated as immutable by convention: steppers allocate fresh
    arrays rather than writing in place, so states can be shared freely.
    """

    h: np.ndarray
    q: np.ndarray | None = None
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        if self.q is not None:
            q = np.asarray(self.q, dtype=float)
            if q.shape != self.h.shape:
                raise ValueError("h and q must have matching shapes")
            object.__setattr__(self, "q", q)


def nusselt_state(grid: Grid) -> InterfaceState:
    """The uniform base state: h = 1, q = 2/3, t = 0."""
    return InterfaceState(np.ones(grid.n), np.full(grid.n, NUSSELT_FLUX), 0.0)


def deviation_norm(state: InterfaceState, grid: Grid) -> float:
    """Discrete 2-norm of the deviation from the flat film,
    (sum (h_i - 1)^2 dx)^(1/2)."""
    dh = state.h - 1.0
    return math.sqrt(float(np.sum(dh * dh)) * grid.spacing)
