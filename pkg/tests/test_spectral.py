import numpy as np
import pytest
import scipy.signal

from nudgewin.core.spectral import (
    Grid,
    SpectralField,
    build_grid,
    dealias,
    energy_spectrum,
    forward,
    inner,
    is_divergence_free,
    leray_project,
    nonlinear_term,
    norms,
    project_high_modes,
    project_low_modes,
    random_solenoidal,
    shell_eigenvalue,
    shell_index,
    stokes,
    vorticity_magnitude,
)
from nudgewin.errors import ConfigurationError


def physical_grid(grid):
    x = np.arange(grid.n) * grid.dx
    return np.meshgrid(*([x] * grid.dim), indexing="ij")


def single_mode(grid, k_int, amplitude):
    """Real field amplitude * cos(2 pi k.x / L)."""
    x = physical_grid(grid)
    phase = sum(2 * np.pi * k * xi / grid.length for k, xi in zip(k_int, x))
    values = np.array([a * np.cos(phase) for a in amplitude])
    return SpectralField.from_physical(grid, values)


def convolution_oracle(field):
    """(u . grad) u by a direct sum over triads, truncated to the 2/3 band, then projected."""
    grid = field.grid
    n, dim = grid.n, grid.dim
    band = n // 3
    axes = grid.axes
    centre = slice(n // 2 - band, n // 2 + band + 1)
    crop = (slice(None),) + (centre,) * dim

    def centred(coeffs):
        return np.fft.fftshift(coeffs, axes=axes)[crop] / n ** dim

    c = centred(field.coeffs)
    gradients = [centred(1j * grid.k[j] * field.coeffs) for j in range(dim)]
    out = np.zeros((dim,) + (2 * band + 1,) * dim, dtype=complex)
    keep = (slice(band, 3 * band + 1),) * dim
    for i in range(dim):
        for j in range(dim):
            full = scipy.signal.convolve(c[j], gradients[j][i], mode="full", method="direct")
            out[i] += full[keep]
    shifted = np.zeros_like(field.coeffs)
    shifted[crop] = out * n ** dim
    coeffs = np.fft.ifftshift(shifted, axes=axes)
    return leray_project(SpectralField(grid, coeffs))


class TestGrid:
    """Test grid construction and wavenumber layout."""

    def test_frequency_layout(self):
        """Test DFT ordering with the Nyquist frequency reported as +n/2."""
        grid = build_grid(2, 4, 1.0)
        assert list(grid.frequencies) == [0, 1, 2, -1]
        assert np.allclose(grid.wavenumbers, 2 * np.pi * np.array([0, 1, 2, -1]))

    def test_lambda1(self):
        """Test the smallest Stokes eigenvalue on the unit box."""
        assert build_grid(3, 4).lambda1 == pytest.approx(4 * np.pi ** 2)
        assert build_grid(2, 8, 2.0).lambda1 == pytest.approx(np.pi ** 2)

    @pytest.mark.parametrize("dim, n, length", [(2, 5, 1.0), (4, 8, 1.0), (2, 2, 1.0), (2, 8, 0.0)])
    def test_invalid_grid(self, dim, n, length):
        """Test that odd n, bad dimensions and non-positive sides are rejected."""
        with pytest.raises(ConfigurationError):
            build_grid(dim, n, length)

    def test_nyquist_zeroed_after_transform(self, grid2d, rng):
        """Test that forward transforms drop every Nyquist coefficient."""
        coeffs = forward(grid2d, rng.standard_normal((2,) + grid2d.shape))
        nyquist = grid2d.n // 2
        assert np.all(coeffs[:, nyquist, :] == 0)
        assert np.all(coeffs[:, :, nyquist] == 0)

    def test_shell_index(self):
        """Test distinct sums of squares in 2D and 3D."""
        assert [shell_index(m, 2) for m in range(9)] == [0, 1, 2, 4, 5, 8, 9, 10, 13]
        assert [shell_index(m, 3) for m in range(1, 9)] == [1, 2, 3, 4, 5, 6, 8, 9]
        assert shell_eigenvalue(3, 2) == pytest.approx(16 * np.pi ** 2)
        assert Grid(2, 8).lambda_of(1) == Grid(2, 8).lambda1


class TestSpectralField:
    """Test field construction and transforms."""

    def test_zero_mean(self, grid2d):
        """Test that the k = 0 coefficient is always removed."""
        x, y = physical_grid(grid2d)
        field = SpectralField.from_physical(grid2d, np.array([3.0 + np.sin(2 * np.pi * y), np.ones_like(x)]))
        assert np.all(field.coeffs[:, 0, 0] == 0)

    def test_round_trip(self, field2d):
        """Test spectral -> physical -> spectral reproduces coefficients."""
        back = SpectralField.from_physical(field2d.grid, field2d.to_physical())
        scale = np.max(np.abs(field2d.coeffs))
        assert np.max(np.abs(back.coeffs - field2d.coeffs)) <= 1e-13 * scale

    def test_shape_checked(self, grid2d):
        """Test that coefficient arrays of the wrong shape are rejected."""
        with pytest.raises(ConfigurationError):
            SpectralField(grid2d, np.zeros((3,) + grid2d.shape, dtype=complex))

    def test_random_field_is_solenoidal_and_dealiased(self, field3d):
        """Test the random field generator output."""
        assert is_divergence_free(field3d)
        assert np.all(field3d.coeffs[:, ~field3d.grid.dealias] == 0)


class TestLerayProjection:
    """Test the Leray projection."""

    def test_gradient_annihilated(self, grid2d):
        """Test that a pure gradient mode projects to zero."""
        field = single_mode(grid2d, (1, 0), (1.0, 0.0))
        assert np.max(np.abs(leray_project(field).coeffs)) <= 1e-12

    def test_orthogonal_mode_unchanged(self, grid2d):
        """Test that a transverse mode is left alone."""
        field = single_mode(grid2d, (1, 0), (0.0, 1.0))
        assert np.allclose(leray_project(field).coeffs, field.coeffs, atol=1e-12)

    def test_diagonal_mode(self, grid2d):
        """Test the projection formula along k = (1, 1)."""
        field = single_mode(grid2d, (1, 1), (1.0, 0.0))
        expected = single_mode(grid2d, (1, 1), (0.5, -0.5))
        assert np.allclose(leray_project(field).coeffs, expected.coeffs, atol=1e-10)

    def test_idempotent_and_contracting(self, grid3d, rng):
        """Test P P f = P f and ||P f|| <= ||f||."""
        field = SpectralField.from_physical(grid3d, rng.standard_normal((3,) + grid3d.shape))
        once = leray_project(field)
        twice = leray_project(once)
        assert np.allclose(twice.coeffs, once.coeffs, atol=1e-12 * np.max(np.abs(once.coeffs)))
        assert norms(once).l2 <= norms(field).l2
        assert is_divergence_free(once)


class TestNonlinearTerm:
    """Test the dealiased pseudospectral advection term."""

    def test_zero_field(self, grid2d):
        """Test B(0, 0) = 0."""
        zero = SpectralField.zeros(grid2d)
        assert np.all(nonlinear_term(zero).coeffs == 0)

    def test_shear_flow(self, grid2d):
        """Test that a steady shear u = (sin 2 pi y, 0) has no self-advection."""
        x, y = physical_grid(grid2d)
        field = SpectralField.from_physical(grid2d, np.array([np.sin(2 * np.pi * y), np.zeros_like(x)]), True)
        assert np.max(np.abs(nonlinear_term(field).coeffs)) <= 1e-10

    @pytest.mark.parametrize("dim, n", [(2, 16), (3, 8)])
    def test_matches_convolution_oracle(self, dim, n, rng):
        """Test against a direct triad sum on dealiased random fields."""
        field = random_solenoidal(Grid(dim, n), rng)
        computed = nonlinear_term(field).coeffs
        expected = convolution_oracle(field).coeffs
        assert np.max(np.abs(computed - expected)) <= 1e-12 * np.max(np.abs(expected))

    def test_energy_conserving(self, field3d):
        """Test <B(u, u), u> vanishes on dealiased fields."""
        size = norms(field3d)
        assert abs(inner(nonlinear_term(field3d), field3d)) <= 1e-12 * size.h1 * size.l2 ** 2

    def test_enstrophy_conserving_in_2d(self, field2d):
        """Test <B(w, w), A w> vanishes in 2D."""
        b = nonlinear_term(field2d)
        scale = norms(b).l2 * norms(stokes(field2d)).l2
        assert abs(inner(b, stokes(field2d))) <= 1e-12 * scale

    def test_output_dealiased_and_solenoidal(self, field2d):
        """Test that B(u, u) lies in the 2/3 band and is divergence free."""
        b = nonlinear_term(field2d)
        assert np.all(b.coeffs[:, ~field2d.grid.dealias] == 0)
        assert is_divergence_free(b)


class TestNormsAndSpectra:
    """Test norms, shell spectra and modal projections."""

    def test_single_mode_norms(self, grid2d):
        """Test Parseval for u = (sin 2 pi x, 0)."""
        x, _ = physical_grid(grid2d)
        field = SpectralField.from_physical(grid2d, np.array([np.sin(2 * np.pi * x), np.zeros_like(x)]))
        result = norms(field)
        assert result.l2 ** 2 == pytest.approx(0.5, rel=1e-13)
        assert result.h1 ** 2 == pytest.approx(0.5 * (2 * np.pi) ** 2, rel=1e-13)
        assert result.l2_of_laplacian ** 2 == pytest.approx(0.5 * (2 * np.pi) ** 4, rel=1e-13)

    def test_zero_norms(self, grid3d):
        """Test that every norm of zero is zero."""
        assert norms(SpectralField.zeros(grid3d)) == (0.0, 0.0, 0.0)

    def test_single_shell_spectrum(self, grid2d):
        """Test a unit-norm mode on shell 3 puts 1/2 in that shell only."""
        field = single_mode(grid2d, (3, 0), (0.0, np.sqrt(2.0)))
        spectrum = energy_spectrum(field)
        assert spectrum[3] == pytest.approx(0.5, rel=1e-13)
        assert np.sum(np.delete(spectrum, 3)) <= 1e-25

    def test_spectrum_sums_to_energy(self, field3d):
        """Test sum of shell energies equals half the squared L2 norm."""
        total = np.sum(energy_spectrum(field3d))
        assert total == pytest.approx(0.5 * norms(field3d).l2 ** 2, rel=1e-13)

    def test_poincare(self, field2d):
        """Test lambda1 ||u||^2 <= ||grad u||^2."""
        result = norms(field2d)
        assert field2d.grid.lambda1 * result.l2 ** 2 <= result.h1 ** 2

    def test_low_high_orthogonality(self, field3d):
        """Test ||u||^2 = ||P_m u||^2 + ||Q_m u||^2."""
        low = norms(project_low_modes(field3d, 3)).l2
        high = norms(project_high_modes(field3d, 3)).l2
        assert low ** 2 + high ** 2 == pytest.approx(norms(field3d).l2 ** 2, rel=1e-13)
        assert inner(project_low_modes(field3d, 3), project_high_modes(field3d, 3)) == pytest.approx(0.0, abs=1e-12)

    def test_dealias_idempotent(self, grid2d, rng):
        """Test that the 2/3 truncation leaves band-limited fields alone."""
        field = SpectralField.from_physical(grid2d, rng.standard_normal((2,) + grid2d.shape))
        once = dealias(field)
        assert np.array_equal(dealias(once).coeffs, once.coeffs)

    def test_vorticity_magnitude(self, grid2d):
        """Test |curl (0, sin 2 pi x)| = 2 pi |cos 2 pi x|."""
        x, _ = physical_grid(grid2d)
        field = SpectralField.from_physical(grid2d, np.array([np.zeros_like(x), np.sin(2 * np.pi * x)]), True)
        assert np.allclose(vorticity_magnitude(field), 2 * np.pi * np.abs(np.cos(2 * np.pi * x)), atol=1e-10)
