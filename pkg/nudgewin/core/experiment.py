"""Identical-twin protocol: ramp-up, twin evolution, error tracking and sweeps."""
import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ..errors import BlowUpError, ConfigurationError
from .assimilation import AssimilationConfig, InterpolantSpec, NudgingHook, hot_replace, observe
from .dynamics import BOUNDARY_SNAP, SolverParams, cfl_dt, rk4_step
from .spectral import Grid, SpectralField, energy_spectrum, norms, project_low_modes, random_solenoidal

logger = logging.getLogger(__name__)

COLUMNS = ("t", "err_l2", "err_h1", "energy_ref", "energy_twin", "nudge_active", "scheme")


@dataclass(frozen=True)
class RampSpec:
    seed: int = 0
    k0: Optional[float] = None
    T_ramp: float = 0.0
    energy: float = 1.0

    def peak(self, grid):
        return self.k0 if self.k0 is not None else grid.n / 8.0


@dataclass(frozen=True)
class ExperimentConfig:
    grid: Grid
    solver: SolverParams
    assimilation: AssimilationConfig
    ramp: RampSpec = RampSpec()
    T: float = 1.0
    tol: float = 1e-6
    out_dir: str = "."

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigurationError(f"Run time must be positive, got {self.T}.")
        if self.ramp.T_ramp < 0:
            raise ConfigurationError(f"Ramp time must be non-negative, got {self.ramp.T_ramp}.")
        if self.ramp.k0 is not None and not self.ramp.k0 > 0:
            raise ConfigurationError(f"Spectrum peak must be positive, got {self.ramp.k0}.")
        if not self.tol > 0:
            raise ConfigurationError(f"Convergence tolerance must be positive, got {self.tol}.")
        self.assimilation.interpolant.validate_for(self.grid)

    def with_scheme(self, scheme, mu=None, tau=None, interpolant=None):
        current = self.assimilation
        assimilation = dataclasses.replace(
            current,
            scheme=scheme,
            mu=current.mu if mu is None else mu,
            tau=current.tau if tau is None else tau,
            interpolant=interpolant or current.interpolant,
        )
        return dataclasses.replace(self, assimilation=assimilation)


class SeriesRow(NamedTuple):
    t: float
    err_l2: float
    err_h1: float
    energy_ref: float
    energy_twin: float
    nudge_active: int
    scheme: str


class CycleRecord(NamedTuple):
    t_n: float
    err_l2: float
    low_mode_err: float


@dataclass
class TimeSeries:
    scheme: str
    rows: list = field(default_factory=list)
    cycles: list = field(default_factory=list)
    failed: bool = False
    failure: Optional[str] = None

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        index = COLUMNS.index(name)
        return np.array([row[index] for row in self.rows])

    @property
    def final_error(self):
        return self.rows[-1].err_l2 if self.rows else float("nan")


def target_profile(grid, k0, energy=1.0):
    """Shell energies A k^4 exp(-2 (k/k0)^2), band-limited to the 2/3 sphere."""
    shell_max = int(math.floor(grid.n / 3.0 - 0.5))
    shells = np.arange(int(grid.shells.max()) + 1, dtype=float)
    profile = shells ** 4 * np.exp(-2.0 * (shells / k0) ** 2)
    profile[0] = 0.0
    profile[shell_max + 1:] = 0.0
    return energy * profile / profile.sum()


def initial_field(grid, ramp):
    """Random-phase solenoidal field rescaled shell by shell onto the target profile."""
    rng = np.random.default_rng(ramp.seed)
    target = target_profile(grid, ramp.peak(grid), ramp.energy)
    field_ = random_solenoidal(grid, rng, mask=target[grid.shells] > 0)
    current = energy_spectrum(field_)
    scale = np.zeros_like(current)
    present = current > 0
    scale[present] = np.sqrt(target[present] / current[present])
    return SpectralField(grid, field_.coeffs * scale[grid.shells], True)


def integrate(state, params, t0, t1, hook=None, trajectory="state"):
    t = t0
    while t < t1 - BOUNDARY_SNAP * max(abs(t1), 1.0):
        dt = cfl_dt(state, params, t=t, next_boundary=t1)
        state = rk4_step(state, t, dt, params, hook, trajectory=trajectory)
        t = t1 if abs(t + dt - t1) <= BOUNDARY_SNAP * dt else t + dt
    return state


def ramp_up(cfg):
    state = initial_field(cfg.grid, cfg.ramp)
    if cfg.ramp.T_ramp == 0:
        return state
    logger.info("Ramping reference to t=%g on %dD n=%d", cfg.ramp.T_ramp, cfg.grid.dim, cfg.grid.n)
    try:
        return integrate(state, cfg.solver, 0.0, cfg.ramp.T_ramp, trajectory="reference ramp")
    except BlowUpError as error:
        raise BlowUpError(
            f"{error} Reduce the time step (cfl or dt_fixed) or the initial energy.",
            t=error.t,
            trajectory=error.trajectory,
        ) from error


def _energy(state):
    return 0.5 * norms(state).l2 ** 2


class TwinRun:
    """Co-evolves reference and twin on one shared dt sequence."""

    def __init__(self, cfg, reference, twin=None, t=0.0, step=0, n_obs=0, series=None):
        self.cfg = cfg
        self.reference = reference
        self.twin = twin if twin is not None else SpectralField.zeros(cfg.grid)
        self.t = t
        self.step = step
        self.n_obs = n_obs
        self.series = series if series is not None else TimeSeries(cfg.assimilation.scheme)
        self.record = None
        self._hook = None
        resumed = series is not None and len(series) > 0
        self._observe(fresh=not resumed)
        if not resumed:
            self._append_row(active=0)

    @property
    def scheme(self):
        return self.cfg.assimilation.scheme

    def _eps(self):
        return BOUNDARY_SNAP * self.cfg.assimilation.kappa

    def _observe(self, fresh=True):
        acfg = self.cfg.assimilation
        if self.scheme == "none":
            return
        t_n = acfg.observation_time(self.n_obs)
        self.record = observe(self.reference, self.twin, t_n, acfg)
        self._hook = NudgingHook(self.record, acfg) if self.scheme == "nudge_window" else None
        if not fresh:
            return
        if self.scheme == "hot":
            self.twin = hot_replace(self.twin, self.record, acfg.interpolant.m)
        error = self.reference - self.twin
        low = float("nan")
        if acfg.interpolant.kind == "modal":
            low = norms(project_low_modes(error, acfg.interpolant.m)).l2
        self.series.cycles.append(CycleRecord(t_n, norms(error).l2, low))

    def _append_row(self, active):
        error = norms(self.reference - self.twin)
        self.series.rows.append(SeriesRow(
            self.t,
            error.l2,
            error.h1,
            _energy(self.reference),
            _energy(self.twin),
            int(active),
            self.scheme,
        ))

    def next_boundary(self, until):
        acfg = self.cfg.assimilation
        t_n = acfg.observation_time(self.n_obs)
        candidates = (t_n + acfg.tau, acfg.observation_time(self.n_obs + 1), until)
        return min(c for c in candidates if c > self.t + self._eps())

    def advance(self, until):
        """Take one step towards `until`; True when it ended on an observation instant."""
        boundary = self.next_boundary(until)
        dt = cfl_dt(self.reference, self.cfg.solver, t=self.t, next_boundary=boundary)
        active = self._hook is not None and self._hook.active(self.t)
        solver = self.cfg.solver
        reference = rk4_step(self.reference, self.t, dt, solver, trajectory="reference")
        twin = rk4_step(self.twin, self.t, dt, solver, self._hook if active else None, trajectory="twin")
        self.reference, self.twin = reference, twin
        t = self.t + dt
        self.t = boundary if abs(t - boundary) <= self._eps() else t
        self.step += 1
        next_obs = self.cfg.assimilation.observation_time(self.n_obs + 1)
        observed = abs(self.t - next_obs) <= self._eps()
        if observed:
            self.t = next_obs
            self.n_obs += 1
            self._observe()
        self._append_row(active)
        logger.debug("step %d t=%.6g dt=%.3g err=%.3e", self.step, self.t, dt, self.series.rows[-1].err_l2)
        return observed

    def run(self, until, on_observation=None):
        while self.t < until - self._eps():
            observed = self.advance(until)
            if observed and on_observation is not None:
                on_observation(self)
        return self.series


def run_twin(cfg, reference_initial, twin_initial=None, on_observation=None):
    """Run the twin experiment to cfg.T; blow-ups end the series with a failure marker."""
    acfg = cfg.assimilation
    logger.info(
        "Twin run: scheme=%s mu=%g kappa=%g tau=%g T=%g",
        acfg.scheme, acfg.mu, acfg.kappa, acfg.tau, cfg.T,
    )
    run = TwinRun(cfg, reference_initial, twin_initial)
    return resume_twin(run, on_observation)


def resume_twin(run, on_observation=None):
    try:
        run.run(run.cfg.T, on_observation)
    except BlowUpError as error:
        logger.error("Twin run stopped: %s", error)
        run.series.failed = True
        run.series.failure = str(error)
    return run.series


def convergence_time(series, tol):
    """First time after which err_l2 stays at or below tol; None if never."""
    if not tol > 0:
        raise ConfigurationError(f"Tolerance must be positive, got {tol}.")
    if not series.rows:
        return None
    errors = series.column("err_l2")
    times = series.column("t")
    above = np.nonzero(~(errors <= tol))[0]
    if len(above) == 0:
        return float(times[0])
    if above[-1] == len(errors) - 1:
        return None
    return float(times[above[-1] + 1])


def _row_at(times, t, eps):
    index = int(np.argmin(np.abs(times - t)))
    return index if abs(times[index] - t) <= eps else None


def cycle_errors(series, kappa, tau):
    """(t_n, error at window open, error at window close) for every complete cycle."""
    times = series.column("t")
    errors = series.column("err_l2")
    eps = 1e-6 * kappa
    cycles = []
    n = 0
    while n * kappa + tau <= times[-1] + eps:
        t_n = n * kappa
        start, end = _row_at(times, t_n, eps), _row_at(times, t_n + tau, eps)
        if start is not None and end is not None:
            cycles.append((t_n, float(errors[start]), float(errors[end])))
        n += 1
    return cycles


def contraction_factor(series, kappa, skip=0):
    """Geometric mean of err(t_{n+1}) / err(t_n) over cycles after `skip`."""
    openings = [open_err for _, open_err, _ in cycle_errors(series, kappa, kappa)][skip:]
    ratios = [b / a for a, b in zip(openings, openings[1:]) if a > 0 and b > 0]
    if not ratios:
        return float("nan")
    return float(np.exp(np.mean(np.log(ratios))))


def _sweep_configs(base, mu_list, tau_list, scheme_list):
    if not mu_list or not tau_list or not scheme_list:
        raise ConfigurationError("Sweep lists must be non-empty.")
    combos = []
    for scheme in scheme_list:
        if scheme == "nudge_window":
            for mu in mu_list:
                for tau in tau_list:
                    combos.append((scheme, mu, tau, base.with_scheme(scheme, mu=mu, tau=tau)))
        else:
            combos.append((scheme, float("nan"), float("nan"), base.with_scheme(scheme)))
    return combos


def sweep(base, mu_list, tau_list, scheme_list, reference_initial=None, max_workers=1):
    """One row per combination, all from the same reference; row order is deterministic."""
    combos = _sweep_configs(base, mu_list, tau_list, scheme_list)
    reference = reference_initial if reference_initial is not None else ramp_up(base)

    def run_row(index):
        scheme, mu, tau, cfg = combos[index]
        series = run_twin(cfg, reference)
        row = {
            "index": index,
            "scheme": scheme,
            "mu": mu,
            "tau": tau,
            "convergence_time": convergence_time(series, cfg.tol),
            "final_err": series.final_error,
            "failed": series.failed,
            "failure": series.failure or "",
        }
        logger.info("Sweep row %d: %s", index, row)
        return row

    indices = range(len(combos))
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(run_row, indices))
    return [run_row(i) for i in indices]


def search_cutoff(base, m_list, reference_initial=None):
    """Smallest modal cutoff for which direct replacement converges within base.T."""
    reference = reference_initial if reference_initial is not None else ramp_up(base)
    rows = []
    best = None
    for m in sorted(m_list):
        cfg = base.with_scheme("hot", interpolant=InterpolantSpec(kind="modal", m=m))
        series = run_twin(cfg, reference)
        t_conv = convergence_time(series, cfg.tol)
        rows.append({"m": m, "convergence_time": t_conv, "final_err": series.final_error})
        if t_conv is not None and best is None:
            best = m
    return best, rows
