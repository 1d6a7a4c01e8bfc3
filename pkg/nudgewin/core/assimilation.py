"""Interpolants, observations and the windowed feedback term.

The feedback acts only on the window [t_n, t_n + tau) of each observation
interval of length kappa. With tau = kappa it is active throughout and the
scheme reduces to classical nudging with piecewise-constant data.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from .spectral import (
    SpectralField,
    forward,
    inverse,
    leray_project,
    low_mode_mask,
    project_low_modes,
    zero_mean,
)

logger = logging.getLogger(__name__)

INTERPOLANT_KINDS = ("modal", "volume_average")
SCHEMES = ("none", "nudge_window", "hot")
FEEDBACK_FORMS = ("frozen", "tracking")

DEFAULT_C0 = 1.0 / np.pi ** 2
DEFAULT_C1 = 1.0

# relative to kappa; absorbs roundoff in accumulated times
WINDOW_TOLERANCE = 1e-9


@dataclass(frozen=True)
class InterpolantSpec:
    kind: str = "modal"
    m: Optional[int] = None
    h: Optional[float] = None
    c0: float = DEFAULT_C0
    c1: float = DEFAULT_C1

    def __post_init__(self):
        if self.kind not in INTERPOLANT_KINDS:
            raise ConfigurationError(
                f"Unknown interpolant '{self.kind}', expected one of {', '.join(INTERPOLANT_KINDS)}."
            )
        if self.kind == "modal" and (self.m is None or self.m < 1):
            raise ConfigurationError(f"Modal cutoff must be at least 1, got {self.m}.")
        if self.kind == "volume_average" and (self.h is None or not self.h > 0):
            raise ConfigurationError(f"Cell side must be positive, got {self.h}.")
        if not self.c0 > 0 or not self.c1 > 0:
            raise ConfigurationError("Interpolant constants c0 and c1 must be positive.")

    def cells_per_axis(self, length):
        count = length / self.h
        cells = int(round(count))
        if cells < 1 or abs(count - cells) > 1e-9 * count:
            raise ConfigurationError(f"Cell side h={self.h} does not divide the box side {length}.")
        return cells

    def validate_for(self, grid):
        """Return cells per axis for volume averages; check the grid can host them."""
        if self.kind != "volume_average":
            return None
        cells = self.cells_per_axis(grid.length)
        if grid.n % cells or (grid.n // cells) % 2:
            raise ConfigurationError(
                f"Cells of side h={self.h} must hold an even number of the {grid.n} points per axis."
            )
        return cells


@dataclass(frozen=True)
class AssimilationConfig:
    interpolant: InterpolantSpec
    scheme: str = "nudge_window"
    mu: float = 0.0
    kappa: float = 1e-3
    tau: Optional[float] = None
    feedback_form: str = "frozen"

    def __post_init__(self):
        if self.tau is None:
            object.__setattr__(self, "tau", self.kappa)
        if self.scheme not in SCHEMES:
            raise ConfigurationError(
                f"Unknown scheme '{self.scheme}', expected one of {', '.join(SCHEMES)}."
            )
        if self.feedback_form not in FEEDBACK_FORMS:
            raise ConfigurationError(
                f"Unknown feedback form '{self.feedback_form}', expected frozen or tracking."
            )
        if not self.kappa > 0:
            raise ConfigurationError(f"Observation interval must be positive, got {self.kappa}.")
        if self.scheme == "nudge_window":
            if not 0 < self.tau <= self.kappa:
                raise ConfigurationError(
                    f"Window length must satisfy 0 < tau <= kappa, got tau={self.tau}, kappa={self.kappa}."
                )
            if self.mu < 0:
                raise ConfigurationError(f"Nudging strength must be non-negative, got {self.mu}.")
        if self.scheme == "hot" and self.interpolant.kind != "modal":
            raise ConfigurationError("Direct modal replacement requires a modal interpolant.")

    def observation_time(self, n, t0=0.0):
        return t0 + n * self.kappa

    def window_active(self, t_n, t):
        if self.scheme != "nudge_window":
            return False
        eps = WINDOW_TOLERANCE * self.kappa
        return t_n - eps <= t < t_n + self.tau - eps


@dataclass(frozen=True, eq=False)
class ObservationRecord:
    t_n: float
    obs_u: SpectralField
    obs_v: Optional[SpectralField] = None
    kind: str = "modal"


def _cell_average_multiplier(grid, h):
    x = grid.wavenumbers * h
    safe = np.where(x == 0, 1.0, x)
    g = np.where(x == 0, 1.0 + 0j, np.expm1(1j * safe) / (1j * safe))
    mesh = np.meshgrid(*([g] * grid.dim), indexing="ij")
    return np.prod(mesh, axis=0)


def volume_average(field, spec):
    """Exact cell means over cubes of side h, sampled back onto the grid."""
    grid = field.grid
    cells = spec.validate_for(grid)
    per_cell = grid.n // cells
    # value at x is the mean over the cube [x, x + h)
    averaged = inverse(grid, field.coeffs * _cell_average_multiplier(grid, spec.h))
    corners = averaged[(slice(None),) + (slice(None, None, per_cell),) * grid.dim]
    values = corners
    for axis in range(1, grid.dim + 1):
        values = np.repeat(values, per_cell, axis=axis)
    return SpectralField(grid, zero_mean(grid, forward(grid, values)), False)


def interpolate(field, spec):
    if spec.kind == "modal":
        return project_low_modes(field, spec.m)
    return volume_average(field, spec)


def _freeze(field):
    field.coeffs.flags.writeable = False
    return field


def observe(reference_state, twin_state, t_n, cfg):
    spec = cfg.interpolant
    obs_u = _freeze(interpolate(reference_state, spec).copy())
    obs_v = None
    if cfg.scheme == "nudge_window" and cfg.feedback_form == "frozen":
        obs_v = _freeze(interpolate(twin_state, spec).copy())
    return ObservationRecord(t_n=t_n, obs_u=obs_u, obs_v=obs_v, kind=spec.kind)


def nudging_force(record, twin_state, t, cfg):
    """mu I(u - v) on the window containing t, zero outside it."""
    if cfg.scheme != "nudge_window":
        raise ConfigurationError(f"Nudging force requested for scheme '{cfg.scheme}'.")
    if not cfg.window_active(record.t_n, t):
        return SpectralField.zeros(twin_state.grid)
    if cfg.feedback_form == "frozen":
        difference = record.obs_u - record.obs_v
    else:
        difference = record.obs_u - interpolate(twin_state, cfg.interpolant)
    return leray_project(cfg.mu * difference)


class NudgingHook:
    """Feedback callback for rk4_step; caches the frozen-form force per record."""

    def __init__(self, record, cfg):
        self.record = record
        self.cfg = cfg
        self._frozen = None

    def active(self, t):
        return self.cfg.window_active(self.record.t_n, t)

    def __call__(self, t, stage_state):
        if not self.active(t):
            return None
        if self.cfg.feedback_form == "tracking":
            return nudging_force(self.record, stage_state, t, self.cfg)
        if self._frozen is None:
            self._frozen = nudging_force(self.record, stage_state, t, self.cfg)
        return self._frozen


def hot_replace(twin_state, record, m):
    """Copy the low modes of the observation into the twin, keep its high modes."""
    if record.kind != "modal":
        raise ConfigurationError("Direct modal replacement requires modal observations.")
    mask = low_mode_mask(twin_state.grid, m)
    coeffs = np.where(mask, record.obs_u.coeffs, twin_state.coeffs)
    return SpectralField(twin_state.grid, coeffs, True)
