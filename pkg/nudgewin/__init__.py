import logging
import os

import click
import scipy.fft
from dotenv import load_dotenv

from .commands.analysis_commands import check, diff, spectrum
from .commands.simulation_commands import ramp, run, sweep

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _settings(config=None):
    load_dotenv()
    settings = {
        "NUDGEWIN_WORKERS": int(os.environ.get("NUDGEWIN_WORKERS", "1")),
        "NUDGEWIN_LOG_LEVEL": os.environ.get("NUDGEWIN_LOG_LEVEL", "WARNING"),
        "SWEEP_DATABASE_URI": os.environ.get("SWEEP_DATABASE_URI"),
    }
    if config:
        settings.update(config)
    return settings


def _configure_logging(level):
    logger = logging.getLogger(__name__)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.setLevel(level)


def create_app(config=None):
    settings = _settings(config)
    _configure_logging(settings["NUDGEWIN_LOG_LEVEL"])

    @click.group(name="nudgewin")
    @click.pass_context
    def app(ctx):
        """Windowed nudging data assimilation on a periodic Navier-Stokes solver."""
        ctx.obj = settings
        ctx.with_resource(scipy.fft.set_workers(settings["NUDGEWIN_WORKERS"]))

    # Register commands
    for command in (ramp, run, sweep, check, spectrum, diff):
        app.add_command(command)

    return app


def cli(argv=None, config=None):
    """Run the command line and return its exit status."""
    try:
        create_app(config).main(args=argv, prog_name="nudgewin")
    except SystemExit as error:
        if error.code is None:
            return 0
        return error.code if isinstance(error.code, int) else 1
    return 0
