import logging

import click
import numpy as np

from ..core.experiment import TwinRun, convergence_time, resume_twin, ramp_up
from ..core.experiment import sweep as run_sweep
from ..core.spectral import vorticity_magnitude
from ..db import init_db, store_sweep
from ..storage.checkpoint import read_checkpoint, write_checkpoint
from ..storage.snapshot import scalar_snapshot, write_snapshot, write_state
from ..storage.tables import write_sweep, write_timeseries
from .command_utilities import BLOW_UP_EXIT, handle_errors, load_reference, load_run_config, output_path

logger = logging.getLogger(__name__)

config_argument = click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
reference_option = click.option(
    "--reference", "reference_path", type=click.Path(exists=True, dir_okay=False),
    help="Reference initial snapshot; ramped up from the seed when omitted.",
)


@click.command()
@config_argument
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Snapshot path.")
@handle_errors
def ramp(config_path, out_path):
    """Ramp up the reference and write its snapshot."""
    config = load_run_config(config_path)
    experiment = config.to_experiment()
    reference = ramp_up(experiment)
    path = output_path(config, "reference.ndas", out_path)
    write_state(reference, config.nu, config.T_ramp, path)
    click.echo(path)


def _write_vorticity(run, nu, config):
    """Vorticity magnitude of u, v and u - v, all scaled by max |curl u|."""
    fields = {"u": run.reference, "v": run.twin, "diff": run.reference - run.twin}
    magnitudes = {name: vorticity_magnitude(state) for name, state in fields.items()}
    scale = float(np.max(magnitudes["u"])) or 1.0
    for name, values in magnitudes.items():
        write_snapshot(scalar_snapshot(values / scale, nu, run.t), output_path(config, f"vorticity_{name}.ndas"))


@click.command()
@config_argument
@reference_option
@click.option("--twin-from-reference", is_flag=True, help="Start the twin equal to the reference.")
@click.option("--vorticity", is_flag=True, help="Export normalized vorticity-magnitude snapshots.")
@click.option("--checkpoint-dir", type=click.Path(file_okay=False), help="Checkpoint directory.")
@click.option("--checkpoint-every", type=click.IntRange(min=1), default=1, show_default=True,
              help="Observation instants between checkpoints.")
@click.option("--resume", is_flag=True, help="Continue from the checkpoint directory.")
@handle_errors
def run(config_path, reference_path, twin_from_reference, vorticity, checkpoint_dir, checkpoint_every, resume):
    """Run a twin experiment and write its time series and final snapshots."""
    config = load_run_config(config_path)
    experiment = config.to_experiment()
    config_hash = config.config_hash()
    if resume and not checkpoint_dir:
        raise click.UsageError("--resume needs --checkpoint-dir.")

    if resume:
        twin_run = read_checkpoint(checkpoint_dir, experiment, config_hash)
    else:
        reference = load_reference(reference_path, config, experiment)
        twin = reference.copy() if twin_from_reference else None
        twin_run = TwinRun(experiment, reference, twin)

    def on_observation(current):
        if checkpoint_dir and current.n_obs % checkpoint_every == 0:
            write_checkpoint(current, config_hash, checkpoint_dir)

    series = resume_twin(twin_run, on_observation)
    write_timeseries(series, output_path(config, "timeseries.csv"))
    write_state(twin_run.reference, config.nu, twin_run.t, output_path(config, "reference_final.ndas"))
    write_state(twin_run.twin, config.nu, twin_run.t, output_path(config, "twin_final.ndas"))
    if vorticity:
        _write_vorticity(twin_run, config.nu, config)

    t_conv = convergence_time(series, config.tol)
    click.echo(f"final_err = {series.final_error!r}")
    click.echo(f"convergence_time = {'none' if t_conv is None else repr(t_conv)}")
    if series.failed:
        click.echo(f"Error: {series.failure}", err=True)
        raise click.exceptions.Exit(BLOW_UP_EXIT)


@click.command()
@config_argument
@reference_option
@click.option("--mu", "mu_list", type=float, multiple=True, help="Nudging strengths (repeatable).")
@click.option("--tau-frac", "tau_fractions", type=float, multiple=True,
              help="Window lengths as fractions of kappa (repeatable).")
@click.option("--scheme", "scheme_list", type=click.Choice(["none", "nudge_window", "hot"]),
              multiple=True, help="Schemes to run (repeatable).")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True,
              help="Sweep rows run concurrently.")
@click.option("--db", "db_uri", help="SQLAlchemy URI to store the table in.")
@click.option("--label", default="sweep", show_default=True, help="Label of the stored sweep.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="CSV path.")
@click.pass_obj
@handle_errors
def sweep(settings, config_path, reference_path, mu_list, tau_fractions, scheme_list, workers, db_uri, label, out_path):
    """Run every (scheme, mu, tau) combination from one reference."""
    config = load_run_config(config_path)
    experiment = config.to_experiment()
    mu_list = list(mu_list) or [config.mu]
    tau_list = [fraction * config.kappa for fraction in tau_fractions] or [experiment.assimilation.tau]
    scheme_list = list(scheme_list) or [config.scheme]
    reference = load_reference(reference_path, config, experiment)

    rows = run_sweep(experiment, mu_list, tau_list, scheme_list, reference_initial=reference, max_workers=workers)
    path = output_path(config, "sweep.csv", out_path)
    write_sweep(rows, path)

    db_uri = db_uri or (settings or {}).get("SWEEP_DATABASE_URI")
    if db_uri:
        session_factory = init_db(db_uri)
        with session_factory() as session:
            stored = store_sweep(session, label, config.config_hash(), rows)
            logger.info("Stored sweep %d with %d rows", stored.sweep_id, len(rows))
    failed = sum(1 for row in rows if row["failed"])
    click.echo(f"{path}: {len(rows)} rows, {failed} failed")
