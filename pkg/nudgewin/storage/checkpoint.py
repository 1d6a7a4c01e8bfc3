"""Checkpoints taken at observation instants.

A checkpoint directory holds the reference and twin snapshots, the time
series and observation cycles so far, and a manifest of ``key = value``
lines carrying the config hash, the step counter, the time as an exact hex
float and the observation index.
"""
import logging
import os
from dataclasses import dataclass

from ..core.experiment import TwinRun
from ..errors import ConfigurationError, SnapshotFormatError
from .snapshot import read_state, write_state
from .tables import read_cycles, read_timeseries, write_cycles, write_timeseries

logger = logging.getLogger(__name__)

MANIFEST = "manifest.txt"
REFERENCE = "reference.ndas"
TWIN = "twin.ndas"
SERIES = "series.csv"
CYCLES = "cycles.csv"


@dataclass(frozen=True)
class Manifest:
    config_hash: str
    step: int
    t: float
    n_obs: int

    def to_text(self):
        return (
            f"config_hash = {self.config_hash}\n"
            f"step = {self.step}\n"
            f"t = {self.t.hex()}\n"
            f"n_obs = {self.n_obs}\n"
        )

    @classmethod
    def from_text(cls, text):
        values = {}
        for line in text.splitlines():
            if "=" in line:
                key, value = line.split("=", 1)
                values[key.strip()] = value.strip()
        try:
            return cls(
                config_hash=values["config_hash"],
                step=int(values["step"]),
                t=float.fromhex(values["t"]),
                n_obs=int(values["n_obs"]),
            )
        except (KeyError, ValueError) as error:
            raise SnapshotFormatError(f"Malformed checkpoint manifest: {error}") from error


def write_checkpoint(run, config_hash, directory):
    os.makedirs(directory, exist_ok=True)
    nu = run.cfg.solver.nu
    write_state(run.reference, nu, run.t, os.path.join(directory, REFERENCE))
    write_state(run.twin, nu, run.t, os.path.join(directory, TWIN))
    write_timeseries(run.series, os.path.join(directory, SERIES))
    write_cycles(run.series.cycles, os.path.join(directory, CYCLES))
    manifest = Manifest(config_hash, run.step, run.t, run.n_obs)
    # manifest last: a directory without one is incomplete
    with open(os.path.join(directory, MANIFEST), "w", encoding="utf-8") as handle:
        handle.write(manifest.to_text())
    logger.info("Checkpoint at t=%.6g step=%d in %s", run.t, run.step, directory)
    return manifest


def read_checkpoint(directory, cfg, config_hash):
    """Rebuild a TwinRun positioned at the checkpointed observation instant."""
    path = os.path.join(directory, MANIFEST)
    if not os.path.exists(path):
        raise SnapshotFormatError(f"No checkpoint manifest in {directory}.")
    with open(path, encoding="utf-8") as handle:
        manifest = Manifest.from_text(handle.read())
    if manifest.config_hash != config_hash:
        raise ConfigurationError(
            f"Checkpoint in {directory} was written for a different configuration."
        )
    length = cfg.grid.length
    reference, _ = read_state(os.path.join(directory, REFERENCE), length)
    twin, _ = read_state(os.path.join(directory, TWIN), length)
    series = read_timeseries(os.path.join(directory, SERIES))
    series.cycles = read_cycles(os.path.join(directory, CYCLES))
    logger.info("Resuming from t=%.6g step=%d", manifest.t, manifest.step)
    return TwinRun(
        cfg, reference, twin,
        t=manifest.t, step=manifest.step, n_obs=manifest.n_obs, series=series,
    )
