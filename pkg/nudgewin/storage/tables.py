"""CSV emission for time series, sweeps, spectra and theory reports."""
import csv
import logging

from ..core.experiment import COLUMNS, CycleRecord, SeriesRow, TimeSeries
from ..errors import SnapshotFormatError

logger = logging.getLogger(__name__)

TIMESERIES_VERSION = "# nudgewin-timeseries v1"
SWEEP_COLUMNS = ("index", "scheme", "mu", "tau", "convergence_time", "final_err", "failed", "failure")
SPECTRUM_COLUMNS = ("shell", "energy")
THEORY_COLUMNS = ("theorem", "name", "lhs", "relation", "rhs", "satisfied")
CYCLE_COLUMNS = CycleRecord._fields


def format_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write(path, columns, rows, banner=None):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        if banner:
            handle.write(banner + "\n")
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    logger.info("Wrote %s", path)


def write_timeseries(series, path):
    _write(path, COLUMNS, series.rows, banner=TIMESERIES_VERSION)


def read_timeseries(path):
    with open(path, newline="", encoding="utf-8") as handle:
        banner = handle.readline().rstrip("\r\n")
        if banner != TIMESERIES_VERSION:
            raise SnapshotFormatError(f"{path}: expected '{TIMESERIES_VERSION}', got {banner!r}.")
        reader = csv.reader(handle)
        header = tuple(next(reader, ()))
        if header != COLUMNS:
            raise SnapshotFormatError(f"{path}: unexpected columns {header}.")
        series = None
        for record in reader:
            t, err_l2, err_h1, energy_ref, energy_twin, active, scheme = record
            if series is None:
                series = TimeSeries(scheme)
            series.rows.append(SeriesRow(
                float(t), float(err_l2), float(err_h1), float(energy_ref), float(energy_twin),
                int(active), scheme,
            ))
    return series if series is not None else TimeSeries("none")


def write_cycles(cycles, path):
    _write(path, CYCLE_COLUMNS, cycles)


def read_cycles(path):
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader, ()))
        if header != CYCLE_COLUMNS:
            raise SnapshotFormatError(f"{path}: unexpected columns {header}.")
        return [CycleRecord(*(float(value) for value in record)) for record in reader]


def write_sweep(rows, path):
    _write(path, SWEEP_COLUMNS, ([row[name] for name in SWEEP_COLUMNS] for row in rows))


def write_spectrum(spectrum, path):
    _write(path, SPECTRUM_COLUMNS, ((shell, float(energy)) for shell, energy in enumerate(spectrum)))


def write_theory(report, path):
    _write(path, THEORY_COLUMNS, ([c[name] for name in THEORY_COLUMNS] for c in report.csv_rows()))
