"""Fourier representation of zero-mean vector fields on a periodic box.

Transforms use the scipy.fft default normalization: the forward transform is
unscaled and the inverse carries 1/n**dim. Coefficients are stored as the raw
forward DFT, so on a box of side L

    ||u||^2_{L2} = L**dim / n**(2*dim) * sum |u_hat|^2

Every norm, spectrum and inner product in this module is written against that
factor (``Grid.norm_factor``).
"""
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np
import scipy.fft

from ..errors import ConfigurationError

logger = logging.getLogger(__name__)

DIVERGENCE_TOLERANCE = 1e-12


def _sums_of_squares(dim, bound):
    r = int(np.floor(np.sqrt(bound)))
    squares = np.arange(r + 1) ** 2
    total = squares
    for _ in range(dim - 1):
        total = np.add.outer(total, squares).ravel()
    values = np.unique(total)
    return values[(values > 0) & (values <= bound)]


@lru_cache(maxsize=None)
def shell_index(m, dim):
    """Integer |k|^2 of the m-th distinct Stokes shell, 0 for m = 0."""
    if m < 0:
        raise ConfigurationError(f"Shell index must be non-negative, got {m}.")
    if m == 0:
        return 0
    bound = max(4, 2 * m)
    while True:
        values = _sums_of_squares(dim, bound)
        if len(values) >= m:
            return int(values[m - 1])
        bound *= 2


def shell_eigenvalue(m, dim, length=1.0):
    """lambda_m: the m-th distinct Stokes eigenvalue (2 pi / L)^2 |k|^2."""
    return (2.0 * np.pi / length) ** 2 * shell_index(m, dim)


@dataclass(frozen=True)
class Grid:
    dim: int
    n: int
    length: float = 1.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError(f"Grid dimension must be 2 or 3, got {self.dim}.")
        if self.n < 4 or self.n % 2:
            raise ConfigurationError(
                f"Points per axis must be even and at least 4, got {self.n}."
            )
        if not self.length > 0:
            raise ConfigurationError(f"Box side must be positive, got {self.length}.")

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def axes(self):
        return tuple(range(-self.dim, 0))

    @property
    def dx(self):
        return self.length / self.n

    @property
    def lambda1(self):
        return (2.0 * np.pi / self.length) ** 2

    @property
    def norm_factor(self):
        return self.length ** self.dim / float(self.n) ** (2 * self.dim)

    def lambda_of(self, m):
        return shell_eigenvalue(m, self.dim, self.length)

    @cached_property
    def frequencies(self):
        """Integer frequencies in DFT order, Nyquist reported as +n/2."""
        freq = np.rint(scipy.fft.fftfreq(self.n, d=1.0 / self.n)).astype(np.int64)
        freq[self.n // 2] = self.n // 2
        return freq

    @cached_property
    def wavenumbers(self):
        return self.frequencies * (2.0 * np.pi / self.length)

    @cached_property
    def k_int(self):
        return np.array(np.meshgrid(*([self.frequencies] * self.dim), indexing="ij"))

    @cached_property
    def k(self):
        return self.k_int * (2.0 * np.pi / self.length)

    @cached_property
    def kint2(self):
        return np.sum(self.k_int ** 2, axis=0)

    @cached_property
    def k2(self):
        return self.kint2 * self.lambda1

    @cached_property
    def keep(self):
        """False on every coefficient carrying a Nyquist frequency."""
        return np.all(np.abs(self.k_int) < self.n // 2, axis=0)

    @cached_property
    def dealias(self):
        """2/3 rule: True where every |integer frequency| <= n/3."""
        return np.all(3 * np.abs(self.k_int) <= self.n, axis=0)

    @cached_property
    def shells(self):
        """Shell number of each coefficient: kappa with kappa - 1/2 < |k| <= kappa + 1/2."""
        return np.ceil(np.sqrt(self.kint2) - 0.5).astype(np.int64)


def build_grid(dim, n, length=1.0):
    return Grid(int(dim), int(n), float(length))


def forward(grid, values):
    """Physical -> spectral, Nyquist coefficients zeroed."""
    coeffs = scipy.fft.fftn(values, axes=grid.axes)
    coeffs *= grid.keep
    return coeffs


def inverse(grid, coeffs):
    """Spectral -> physical (real part)."""
    return scipy.fft.ifftn(coeffs, axes=grid.axes).real


def zero_mean(grid, coeffs):
    coeffs[(Ellipsis,) + (0,) * grid.dim] = 0.0
    return coeffs


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Velocity coefficients, one leading axis entry per spatial component."""

    grid: Grid
    coeffs: np.ndarray
    is_solenoidal: bool = False

    def __post_init__(self):
        expected = (self.grid.dim,) + self.grid.shape
        if self.coeffs.shape != expected:
            raise ConfigurationError(
                f"Coefficient array has shape {self.coeffs.shape}, expected {expected}."
            )

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.dim,) + grid.shape, dtype=complex), True)

    @classmethod
    def from_physical(cls, grid, values, solenoidal=False):
        coeffs = zero_mean(grid, forward(grid, np.asarray(values, dtype=float)))
        field = cls(grid, coeffs)
        return leray_project(field) if solenoidal else field

    def to_physical(self):
        return inverse(self.grid, self.coeffs)

    def copy(self):
        return SpectralField(self.grid, self.coeffs.copy(), self.is_solenoidal)

    def _combine(self, other, coeffs):
        return SpectralField(self.grid, coeffs, self.is_solenoidal and other.is_solenoidal)

    def __add__(self, other):
        return self._combine(other, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self._combine(other, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar, self.is_solenoidal)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.is_solenoidal)


def max_divergence(field):
    """max over k of |k_int . u_hat(k)|, in integer-frequency units."""
    div = np.sum(field.grid.k_int * field.coeffs, axis=0)
    return float(np.max(np.abs(div)))


def is_divergence_free(field, tolerance=DIVERGENCE_TOLERANCE):
    scale = float(np.max(np.abs(field.coeffs)))
    if scale == 0.0:
        return True
    return max_divergence(field) <= tolerance * scale


def leray_coeffs(grid, coeffs):
    k = grid.k_int
    kint2 = np.where(grid.kint2 == 0, 1, grid.kint2)
    div = np.sum(k * coeffs, axis=0)
    out = coeffs - k * (div / kint2)
    return zero_mean(grid, out)


def leray_project(field):
    return SpectralField(field.grid, leray_coeffs(field.grid, field.coeffs), True)


def advection_coeffs(grid, coeffs):
    """Dealiased, projected (u . grad) u for raw coefficients."""
    u = inverse(grid, coeffs)
    product = np.zeros_like(u)
    for j in range(grid.dim):
        product += u[j] * inverse(grid, 1j * grid.k[j] * coeffs)
    out = forward(grid, product)
    out *= grid.dealias
    return leray_coeffs(grid, out)


def nonlinear_term(field):
    """B(u, u) = P_sigma((u . grad) u), pseudospectral with the 2/3 rule."""
    return SpectralField(field.grid, advection_coeffs(field.grid, field.coeffs), True)


def dealias(field):
    return SpectralField(field.grid, field.coeffs * field.grid.dealias, field.is_solenoidal)


def low_mode_mask(grid, m):
    return grid.kint2 <= shell_index(m, grid.dim)


def project_low_modes(field, m):
    """P_m: keep coefficients with |k|^2 <= lambda_m."""
    mask = low_mode_mask(field.grid, m)
    return SpectralField(field.grid, field.coeffs * mask, field.is_solenoidal)


def project_high_modes(field, m):
    """Q_m = I - P_m."""
    mask = ~low_mode_mask(field.grid, m)
    return SpectralField(field.grid, field.coeffs * mask, field.is_solenoidal)


class Norms(NamedTuple):
    l2: float
    h1: float
    l2_of_laplacian: float


def norms(field):
    grid = field.grid
    power = np.sum(np.abs(field.coeffs) ** 2, axis=0)
    l2 = np.sum(power)
    h1 = np.sum(grid.k2 * power)
    lap = np.sum(grid.k2 ** 2 * power)
    return Norms(*(float(np.sqrt(grid.norm_factor * s)) for s in (l2, h1, lap)))


def inner(f, g):
    """L2 inner product <f, g>."""
    return float(f.grid.norm_factor * np.sum((np.conj(f.coeffs) * g.coeffs).real))


def stokes(field):
    """A u = -Laplacian u on solenoidal fields."""
    return SpectralField(field.grid, field.grid.k2 * field.coeffs, field.is_solenoidal)


def energy_spectrum(field):
    """Shell energies E(kappa); sums to half the squared L2 norm."""
    grid = field.grid
    density = 0.5 * grid.norm_factor * np.sum(np.abs(field.coeffs) ** 2, axis=0)
    return np.bincount(
        grid.shells.ravel(), weights=density.ravel(), minlength=int(grid.shells.max()) + 1
    )


def vorticity(field):
    """Spectral vorticity: one component in 2D, three in 3D."""
    k, u = field.grid.k, field.coeffs
    if field.grid.dim == 2:
        return 1j * (k[0] * u[1] - k[1] * u[0])[np.newaxis]
    return 1j * np.array([
        k[1] * u[2] - k[2] * u[1],
        k[2] * u[0] - k[0] * u[2],
        k[0] * u[1] - k[1] * u[0],
    ])


def vorticity_magnitude(field):
    """Pointwise |curl u| in physical space."""
    omega = inverse(field.grid, vorticity(field))
    return np.sqrt(np.sum(omega ** 2, axis=0))


def random_solenoidal(grid, rng, mask=None):
    """Gaussian random solenoidal field restricted to `mask` (2/3 band by default)."""
    noise = rng.standard_normal((grid.dim,) + grid.shape)
    coeffs = zero_mean(grid, forward(grid, noise))
    coeffs *= grid.dealias if mask is None else mask
    return SpectralField(grid, leray_coeffs(grid, coeffs), True)
