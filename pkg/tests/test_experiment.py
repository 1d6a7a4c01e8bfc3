import dataclasses

import numpy as np
import pytest

from nudgewin.core.assimilation import InterpolantSpec
from nudgewin.core.experiment import (
    ExperimentConfig,
    RampSpec,
    SeriesRow,
    TimeSeries,
    TwinRun,
    contraction_factor,
    convergence_time,
    cycle_errors,
    initial_field,
    ramp_up,
    run_twin,
    search_cutoff,
    sweep,
    target_profile,
)
from nudgewin.core.spectral import Grid, energy_spectrum, norms, random_solenoidal
from nudgewin.errors import ConfigurationError


def series_of(errors, dt=0.1):
    rows = [SeriesRow(i * dt, e, e, 1.0, 1.0, 0, "none") for i, e in enumerate(errors)]
    return TimeSeries("none", rows=rows)


def with_assimilation(cfg, **changes):
    return dataclasses.replace(cfg, assimilation=dataclasses.replace(cfg.assimilation, **changes))


class TestRampUp:
    """Test the reference initializer and ramp-up."""

    def test_profile_matched_shellwise(self, small_experiment):
        """Test T_ramp = 0 returns a field whose spectrum is the target profile."""
        field = ramp_up(small_experiment)
        grid = small_experiment.grid
        target = target_profile(grid, grid.n / 8.0)
        spectrum = energy_spectrum(field)
        assert np.allclose(spectrum, target, rtol=1e-12, atol=1e-14)

    def test_unit_energy(self, small_experiment):
        """Test the unit-normalized profile gives 1/2 ||u||^2 = 1."""
        assert 0.5 * norms(ramp_up(small_experiment)).l2 ** 2 == pytest.approx(1.0, rel=1e-12)

    def test_seed_determinism(self):
        """Test same seed gives bit-identical fields and another seed differs."""
        grid = Grid(2, 16)
        first = initial_field(grid, RampSpec(seed=11))
        again = initial_field(grid, RampSpec(seed=11))
        other = initial_field(grid, RampSpec(seed=12))
        assert np.array_equal(first.coeffs, again.coeffs)
        assert not np.array_equal(first.coeffs, other.coeffs)

    def test_ramp_evolves(self, small_experiment):
        """Test a positive ramp time returns an evolved field."""
        cfg = dataclasses.replace(small_experiment, ramp=RampSpec(seed=7, T_ramp=0.005))
        assert not np.array_equal(ramp_up(cfg).coeffs, ramp_up(small_experiment).coeffs)

    @pytest.mark.parametrize("changes", [{"T": 0.0}, {"tol": 0.0}, {"ramp": RampSpec(T_ramp=-1.0)}])
    def test_invalid_config(self, small_experiment, changes):
        """Test that non-positive run times and negative ramp times are rejected."""
        with pytest.raises(ConfigurationError):
            dataclasses.replace(small_experiment, **changes)


class TestRunTwin:
    """Test the twin experiment."""

    def test_identical_twin_no_assimilation(self, small_experiment):
        """Test a twin started on the reference stays on it."""
        cfg = small_experiment.with_scheme("none")
        reference = ramp_up(cfg)
        series = run_twin(cfg, reference, reference.copy())
        assert np.all(series.column("err_l2") <= 1e-12)
        assert not series.failed

    def test_series_shape(self, small_experiment):
        """Test strictly increasing times, non-negative errors and the final time."""
        series = run_twin(small_experiment, ramp_up(small_experiment))
        times = series.column("t")
        assert np.all(np.diff(times) > 0)
        assert times[0] == 0.0 and times[-1] == pytest.approx(small_experiment.T)
        assert np.all(series.column("err_l2") >= 0)
        assert len(series) == 21
        assert set(series.column("scheme")) == {"nudge_window"}

    def test_window_accounting(self, small_experiment):
        """Test the nudging flag follows the window arithmetic of each step start."""
        series = run_twin(small_experiment, ramp_up(small_experiment))
        acfg = small_experiment.assimilation
        active = series.column("nudge_active")
        times = series.column("t")
        assert active[0] == 0
        for i in range(1, len(series)):
            start = times[i - 1]
            t_n = np.floor(start / acfg.kappa + 1e-9) * acfg.kappa
            assert active[i] == int(acfg.window_active(t_n, start))
        assert active[1:].sum() == pytest.approx((len(series) - 1) * acfg.tau / acfg.kappa)

    def test_zero_mu_matches_no_assimilation(self, small_experiment):
        """Test mu = 0 reproduces the unassimilated run."""
        reference = ramp_up(small_experiment)
        nudged = run_twin(small_experiment.with_scheme("nudge_window", mu=0.0), reference)
        free = run_twin(small_experiment.with_scheme("none"), reference)
        assert np.allclose(nudged.column("err_l2"), free.column("err_l2"), rtol=1e-12, atol=0)
        assert np.array_equal(nudged.column("t"), free.column("t"))

    def test_nudging_reduces_error(self, small_experiment):
        """Test the windowed scheme ends closer to the reference than no assimilation."""
        reference = ramp_up(small_experiment)
        nudged = run_twin(small_experiment, reference)
        free = run_twin(small_experiment.with_scheme("none"), reference)
        assert nudged.final_error < free.final_error

    def test_stair_step_decay(self, small_experiment):
        """Test each window closes with less error than it opened with."""
        series = run_twin(small_experiment, ramp_up(small_experiment))
        acfg = small_experiment.assimilation
        cycles = cycle_errors(series, acfg.kappa, acfg.tau)
        assert len(cycles) == 5
        assert all(closed < opened for _, opened, closed in cycles)
        assert contraction_factor(series, acfg.kappa) < 1.0

    def test_hot_zero_low_mode_error(self, small_experiment):
        """Test direct replacement leaves no low-mode error at any observation instant."""
        cfg = small_experiment.with_scheme("hot")
        series = run_twin(cfg, ramp_up(cfg))
        assert len(series.cycles) == 6
        assert all(cycle.low_mode_err <= 1e-14 for cycle in series.cycles)

    def test_swap_symmetry(self, small_experiment, grid2d, rng):
        """Test that exchanging reference and twin leaves the error unchanged."""
        cfg = small_experiment.with_scheme("none")
        a = ramp_up(cfg)
        b = random_solenoidal(grid2d, rng) * 1e-3 + a
        forward = run_twin(cfg, a, b)
        backward = run_twin(cfg, b, a)
        assert np.array_equal(forward.column("err_l2"), backward.column("err_l2"))

    def test_blow_up_marks_failure(self, small_experiment):
        """Test a stiff tracking feedback blows up into a failed partial series."""
        cfg = with_assimilation(small_experiment, mu=1e6, feedback_form="tracking")
        series = run_twin(cfg, ramp_up(cfg))
        assert series.failed
        assert "blew up" in series.failure
        assert len(series) < 21

    def test_twin_run_stepping(self, small_experiment):
        """Test the stepping object reports observation instants."""
        run = TwinRun(small_experiment, ramp_up(small_experiment))
        observed = [run.advance(small_experiment.T) for _ in range(8)]
        assert observed == [False, False, False, True] * 2
        assert run.n_obs == 2
        assert run.t == pytest.approx(8e-3)


class TestConvergenceTime:
    """Test the sustained-crossing convergence time."""

    def test_never_converges(self):
        """Test a series ending above tol gives None."""
        assert convergence_time(series_of([1.0, 0.5, 0.2]), 0.1) is None

    def test_monotone_crossing(self):
        """Test a decreasing series crossing at row j gives t_j."""
        assert convergence_time(series_of([1.0, 0.5, 0.05, 0.01]), 0.1) == pytest.approx(0.2)

    def test_dip_then_recross(self):
        """Test only the final sustained crossing counts."""
        errors = [1.0, 0.05, 0.5, 0.2, 0.01, 0.001]
        assert convergence_time(series_of(errors), 0.1) == pytest.approx(0.4)

    def test_below_from_start(self):
        """Test a series always below tol converges at its first time."""
        assert convergence_time(series_of([0.01, 0.001]), 0.1) == 0.0

    def test_invalid_tol(self):
        """Test that tol must be positive."""
        with pytest.raises(ConfigurationError):
            convergence_time(series_of([1.0]), 0.0)


class TestSweep:
    """Test parameter sweeps."""

    def test_single_combination_matches_run(self, small_experiment):
        """Test a one-row sweep equals a standalone twin run."""
        reference = ramp_up(small_experiment)
        rows = sweep(small_experiment, [50.0], [2e-3], ["nudge_window"], reference_initial=reference)
        series = run_twin(small_experiment, reference)
        assert len(rows) == 1
        assert rows[0]["final_err"] == series.final_error
        assert rows[0]["convergence_time"] == convergence_time(series, small_experiment.tol)

    def test_row_order_and_workers(self, small_experiment):
        """Test deterministic row order, identical with concurrent workers."""
        reference = ramp_up(small_experiment)
        args = (small_experiment, [10.0, 50.0], [4e-3, 2e-3], ["none", "nudge_window", "hot"])
        serial = sweep(*args, reference_initial=reference)
        threaded = sweep(*args, reference_initial=reference, max_workers=3)
        assert [row["scheme"] for row in serial] == ["none"] + ["nudge_window"] * 4 + ["hot"]
        assert [(row["mu"], row["tau"]) for row in serial[1:5]] == [
            (10.0, 4e-3), (10.0, 2e-3), (50.0, 4e-3), (50.0, 2e-3)
        ]
        assert [row["index"] for row in serial] == list(range(6))
        assert [row["final_err"] for row in serial] == [row["final_err"] for row in threaded]

    def test_failure_rows(self, small_experiment):
        """Test a blown-up combination is recorded and the sweep continues."""
        cfg = with_assimilation(small_experiment, feedback_form="tracking")
        rows = sweep(cfg, [10.0, 1e6], [2e-3], ["nudge_window"])
        assert [row["failed"] for row in rows] == [False, True]
        assert rows[1]["failure"]

    def test_empty_lists(self, small_experiment):
        """Test that empty parameter lists are rejected."""
        with pytest.raises(ConfigurationError):
            sweep(small_experiment, [], [2e-3], ["nudge_window"])

    def test_search_cutoff(self, small_experiment):
        """Test the smallest converging modal cutoff is reported."""
        cfg = dataclasses.replace(small_experiment, tol=0.5)
        best, rows = search_cutoff(cfg, [20, 1, 4])
        assert [row["m"] for row in rows] == [1, 4, 20]
        assert best is not None
        for row in rows:
            if row["m"] < best:
                assert row["convergence_time"] is None
        assert next(row for row in rows if row["m"] == best)["convergence_time"] is not None


class TestExperimentConfig:
    """Test experiment configuration helpers."""

    def test_with_scheme(self, small_experiment):
        """Test switching scheme keeps the other assimilation parameters."""
        cfg = small_experiment.with_scheme("nudge_window", mu=3.0)
        assert cfg.assimilation.mu == 3.0
        assert cfg.assimilation.tau == small_experiment.assimilation.tau
        assert cfg.grid == small_experiment.grid

    def test_interpolant_checked_against_grid(self, small_experiment):
        """Test volume averages that do not fit the grid are rejected."""
        with pytest.raises(ConfigurationError):
            small_experiment.with_scheme("nudge_window", interpolant=InterpolantSpec(kind="volume_average", h=0.3))

    def test_timeseries_final_error(self):
        """Test final error of empty and filled series."""
        assert np.isnan(TimeSeries("none").final_error)
        assert series_of([3.0, 2.0]).final_error == 2.0
