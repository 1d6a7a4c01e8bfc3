import functools
import logging
import os

import click

from ..core.experiment import ramp_up
from ..errors import BlowUpError, NudgewinError
from ..storage.config import load_config
from ..storage.snapshot import read_state

logger = logging.getLogger(__name__)

BLOW_UP_EXIT = 3


def handle_errors(command):
    """Turn domain errors into click exits: 1 for bad input, 3 for blow-ups."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except BlowUpError as error:
            click.echo(f"Error: {error}", err=True)
            raise click.exceptions.Exit(BLOW_UP_EXIT)
        except NudgewinError as error:
            raise click.ClickException(str(error))
        except OSError as error:
            raise click.ClickException(f"{error.strerror}: {error.filename}")
    return wrapper


def load_run_config(path):
    config = load_config(path)
    logger.info("Loaded %s (hash %s)", path, config.config_hash()[:12])
    return config


def output_path(config, name, override=None):
    if override:
        return override
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, name)


def load_reference(path, config, experiment):
    """The reference initial state: a snapshot file if given, else a fresh ramp-up."""
    if path is None:
        return ramp_up(experiment)
    state, snapshot = read_state(path, config.length)
    if state.grid != experiment.grid:
        raise click.ClickException(
            f"Snapshot {path} is {snapshot.dim}D n={snapshot.n}, "
            f"configuration asks for {config.dim}D n={config.n}."
        )
    return state
