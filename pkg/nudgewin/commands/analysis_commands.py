import click
import numpy as np

from ..core.spectral import energy_spectrum, norms
from ..core.theory import H1, L2, scan_parameters, theory_report
from ..storage.snapshot import read_state
from ..storage.tables import format_value, write_spectrum, write_theory
from .command_utilities import handle_errors, load_run_config

length_option = click.option("--length", "-L", type=float, default=1.0, show_default=True,
                             help="Box side the snapshot was written on.")

# log grids searched by check --scan
SCAN_MU = np.logspace(-2, 4, 25)
SCAN_KAPPA = np.logspace(-16, -1, 61)
SCAN_TAU_FRACTIONS = (1.0, 0.5, 0.1)


def _echo_scan(theorem, found):
    if found is None:
        click.echo(f"{theorem}.scan = none")
        return
    for key, value in found.items():
        click.echo(f"{theorem}.scan.{key} = {'none' if value is None else repr(float(value))}")


@click.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Also write conditions as CSV.")
@click.option("--scan", is_flag=True, help="Search (mu, kappa, tau) for parameters meeting each theorem.")
@handle_errors
def check(config_path, csv_path, scan):
    """Evaluate the convergence theorem conditions; advisory, exits 0."""
    config = load_run_config(config_path)
    inputs = config.theory_inputs()
    report = theory_report(inputs)
    click.echo(report.to_text(), nl=False)
    if csv_path:
        write_theory(report, csv_path)
    if scan:
        h_values = None
        if inputs.interpolant.kind == "volume_average":
            h_values = [config.length / 2 ** k for k in range(1, 9)]
        for theorem in (L2, H1):
            found = scan_parameters(inputs, theorem, SCAN_MU, SCAN_KAPPA, SCAN_TAU_FRACTIONS, h_values)
            _echo_scan(theorem, found)


@click.command()
@click.argument("snapshot_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="CSV path; stdout when omitted.")
@length_option
@handle_errors
def spectrum(snapshot_path, out_path, length):
    """Shell energy spectrum of a velocity snapshot."""
    state, _ = read_state(snapshot_path, length)
    energies = energy_spectrum(state)
    if out_path:
        write_spectrum(energies, out_path)
        return
    click.echo("shell,energy")
    for shell, energy in enumerate(energies):
        click.echo(f"{shell},{format_value(float(energy))}")


@click.command()
@click.argument("first_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("second_path", type=click.Path(exists=True, dir_okay=False))
@length_option
@handle_errors
def diff(first_path, second_path, length):
    """Error norms of the difference of two velocity snapshots."""
    first, _ = read_state(first_path, length)
    second, _ = read_state(second_path, length)
    if first.grid != second.grid:
        raise click.ClickException("Snapshots live on different grids.")
    error = norms(first - second)
    click.echo(f"err_l2 = {format_value(error.l2)}")
    click.echo(f"err_h1 = {format_value(error.h1)}")
    click.echo(f"err_l2_of_laplacian = {format_value(error.l2_of_laplacian)}")
    click.echo(f"max_abs_coeff = {format_value(float(np.max(np.abs(first.coeffs - second.coeffs))))}")
