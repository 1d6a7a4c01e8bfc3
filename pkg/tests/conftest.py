import numpy as np
import pytest
from click.testing import CliRunner

from nudgewin import create_app
from nudgewin.core.assimilation import AssimilationConfig, InterpolantSpec
from nudgewin.core.dynamics import SolverParams
from nudgewin.core.experiment import ExperimentConfig, RampSpec
from nudgewin.core.spectral import Grid, random_solenoidal
from nudgewin.db import init_db


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale run, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    """A seeded generator so every test sees the same random fields."""
    return np.random.default_rng(1234)


@pytest.fixture
def grid2d():
    return Grid(2, 16)


@pytest.fixture
def grid3d():
    return Grid(3, 8)


@pytest.fixture
def field2d(grid2d, rng):
    """A dealiased random solenoidal 2D field."""
    return random_solenoidal(grid2d, rng)


@pytest.fixture
def field3d(grid3d, rng):
    """A dealiased random solenoidal 3D field."""
    return random_solenoidal(grid3d, rng)


@pytest.fixture
def small_experiment():
    """A 2D 16x16 twin experiment that runs in well under a second."""
    return ExperimentConfig(
        grid=Grid(2, 16),
        solver=SolverParams(nu=0.05, dt_fixed=1e-3),
        assimilation=AssimilationConfig(
            interpolant=InterpolantSpec(kind="modal", m=4),
            scheme="nudge_window",
            mu=50.0,
            kappa=4e-3,
            tau=2e-3,
        ),
        ramp=RampSpec(seed=7, T_ramp=0.0),
        T=0.02,
        tol=1e-6,
    )


@pytest.fixture
def session():
    """A session on a fresh in-memory SQLite database."""
    session_factory = init_db("sqlite:///:memory:")
    with session_factory() as session:
        yield session
        session.rollback()


@pytest.fixture
def app():
    """The command group with test settings."""
    return create_app({"NUDGEWIN_WORKERS": 1, "NUDGEWIN_LOG_LEVEL": "WARNING", "SWEEP_DATABASE_URI": None})


@pytest.fixture
def runner():
    """A click test runner."""
    return CliRunner()


@pytest.fixture
def config_file(tmp_path):
    """Write a small run configuration into tmp_path and return its path."""
    def write(text=None, **overrides):
        values = {
            "dim": 2, "n": 16, "nu": 0.05, "dt_fixed": 1e-3, "scheme": "nudge_window",
            "mu": 50.0, "kappa": 4e-3, "tau": 2e-3, "interp.m": 4, "seed": 7,
            "T_ramp": 0.0, "T": 0.02, "out_dir": str(tmp_path / "out"),
        }
        values.update(overrides)
        body = text if text is not None else "\n".join(f"{key} = {value}" for key, value in values.items())
        path = tmp_path / "run.cfg"
        path.write_text(body + "\n", encoding="utf-8")
        return str(path)
    return write
