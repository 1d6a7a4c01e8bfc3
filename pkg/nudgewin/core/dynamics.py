import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from ..errors import BlowUpError, ConfigurationError
from .spectral import SpectralField, advection_coeffs, leray_coeffs

logger = logging.getLogger(__name__)

FORCINGS = ("taylor_green", "none")

# fraction of a step by which a boundary may be overshot and still be landed on
BOUNDARY_SNAP = 1e-9


@dataclass(frozen=True)
class SolverParams:
    nu: float
    forcing: str = "taylor_green"
    cfl_number: float = 0.5
    dt_fixed: Optional[float] = None
    dt_max: float = 1e-4

    def __post_init__(self):
        if not self.nu > 0:
            raise ConfigurationError(f"Viscosity must be positive, got {self.nu}.")
        if self.forcing not in FORCINGS:
            raise ConfigurationError(
                f"Unknown forcing '{self.forcing}', expected one of {', '.join(FORCINGS)}."
            )
        if not 0 < self.cfl_number <= 1:
            raise ConfigurationError(f"CFL number must lie in (0, 1], got {self.cfl_number}.")
        if self.dt_fixed is not None and not self.dt_fixed > 0:
            raise ConfigurationError(f"Fixed time step must be positive, got {self.dt_fixed}.")
        if not self.dt_max > 0:
            raise ConfigurationError(f"Maximum time step must be positive, got {self.dt_max}.")


def taylor_green_l2(dim, length=1.0):
    """Analytic L2 norm of the Taylor-Green forcing on a box of side L."""
    mean_square = 0.25 if dim == 3 else 0.5
    return float(np.sqrt(mean_square * length ** dim))


@lru_cache(maxsize=8)
def taylor_green_forcing(grid):
    """f = (sin x cos y cos z, -cos x sin y cos z, 0) in units of 2 pi / L.

    In 2D the z-independent restriction (sin x cos y, -cos x sin y) is used.
    The returned coefficients are read-only and shared between calls.
    """
    a = 2.0 * np.pi / grid.length
    x = np.arange(grid.n) * grid.dx
    mesh = np.meshgrid(*([x] * grid.dim), indexing="ij")
    sx, cx = np.sin(a * mesh[0]), np.cos(a * mesh[0])
    sy, cy = np.sin(a * mesh[1]), np.cos(a * mesh[1])
    if grid.dim == 2:
        values = np.array([sx * cy, -cx * sy])
    else:
        cz = np.cos(a * mesh[2])
        values = np.array([sx * cy * cz, -cx * sy * cz, np.zeros_like(sx)])
    field = SpectralField.from_physical(grid, values, solenoidal=True)
    field.coeffs.flags.writeable = False
    return field


def forcing_field(grid, params):
    if params.forcing == "none":
        return None
    return taylor_green_forcing(grid)


def _rhs(grid, coeffs, params, forcing, nudge):
    out = -params.nu * grid.k2 * coeffs - advection_coeffs(grid, coeffs)
    if forcing is not None:
        out += forcing.coeffs
    if nudge is not None:
        out += leray_coeffs(grid, nudge.coeffs)
    return out


def rhs(state, t, params, nudge=None):
    """-nu A u - B(u, u) + f + P_sigma(nudge); autonomous, so t is unused."""
    grid = state.grid
    out = _rhs(grid, state.coeffs, params, forcing_field(grid, params), nudge)
    return SpectralField(grid, out, True)


def rk4_step(state, t, dt, params, hook=None, trajectory="state"):
    """Advance one classical RK4 step.

    ``hook(t, stage_state)`` supplies the feedback term. It is always called
    with the step start time, so a window indicator evaluated inside it cannot
    switch mid-step; the stage state is passed for feedback forms that track
    the current solution.
    """
    if not dt > 0:
        raise ConfigurationError(f"Time step must be positive, got {dt}.")
    grid = state.grid
    forcing = forcing_field(grid, params)

    def stage(coeffs):
        nudge = hook(t, SpectralField(grid, coeffs, True)) if hook is not None else None
        return _rhs(grid, coeffs, params, forcing, nudge)

    u0 = state.coeffs
    k1 = stage(u0)
    k2 = stage(u0 + 0.5 * dt * k1)
    k3 = stage(u0 + 0.5 * dt * k2)
    k4 = stage(u0 + dt * k3)
    out = u0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = leray_coeffs(grid, out * grid.keep)
    if not np.all(np.isfinite(out)):
        logger.error("Non-finite coefficients in %s at t=%.6g (dt=%.3g)", trajectory, t, dt)
        raise BlowUpError(
            f"{trajectory} blew up during the step from t={t:.6g} with dt={dt:.3g}",
            t=t,
            trajectory=trajectory,
        )
    return SpectralField(grid, out, True)


def max_speed(state):
    u = state.to_physical()
    return float(np.sqrt(np.max(np.sum(u ** 2, axis=0))))


def cfl_dt(state, params, t=None, next_boundary=None):
    """Advective CFL step, or dt_fixed, clipped to land on the next boundary."""
    if params.dt_fixed is not None:
        dt = params.dt_fixed
    else:
        speed = max_speed(state)
        dt = params.dt_max
        if speed > 0:
            dt = min(dt, params.cfl_number * state.grid.dx / speed)
    if t is not None and next_boundary is not None:
        remaining = next_boundary - t
        if remaining > 0 and t + dt > next_boundary - BOUNDARY_SNAP * dt:
            dt = remaining
    return dt
