"""Binary field snapshots.

Layout, all little-endian: a 36-byte header (magic ``NDAS``, version u32,
dim u32, n u32, field count u32, nu f64, t f64) followed by the complex
coefficients as interleaved f64 (re, im), field-major then axis-major
(C order over ``(fields, n, ..., n)``).
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.fft

from ..core.spectral import Grid, SpectralField
from ..errors import SnapshotFormatError

logger = logging.getLogger(__name__)

MAGIC = b"NDAS"
VERSION = 1
HEADER = np.dtype([
    ("magic", "S4"),
    ("version", "<u4"),
    ("dim", "<u4"),
    ("n", "<u4"),
    ("fields", "<u4"),
    ("nu", "<f8"),
    ("t", "<f8"),
])
PAYLOAD = np.dtype("<c16")


@dataclass(frozen=True, eq=False)
class Snapshot:
    dim: int
    n: int
    nu: float
    t: float
    coeffs: np.ndarray

    @property
    def field_count(self):
        return self.coeffs.shape[0]

    def to_state(self, length=1.0):
        grid = Grid(self.dim, self.n, length)
        if self.field_count != self.dim:
            raise SnapshotFormatError(
                f"Snapshot holds {self.field_count} field(s), a {self.dim}D velocity needs {self.dim}."
            )
        return SpectralField(grid, np.array(self.coeffs, dtype=complex), True)

    def to_physical(self):
        return scipy.fft.ifftn(self.coeffs, axes=tuple(range(1, self.dim + 1))).real


def state_snapshot(state, nu, t):
    return Snapshot(state.grid.dim, state.grid.n, float(nu), float(t), state.coeffs)


def scalar_snapshot(values, nu, t):
    """Single-field snapshot of a physical scalar, stored as its raw forward DFT."""
    values = np.asarray(values, dtype=float)
    coeffs = scipy.fft.fftn(values)[np.newaxis]
    return Snapshot(values.ndim, values.shape[0], float(nu), float(t), coeffs)


def encode(snapshot):
    header = np.zeros((), dtype=HEADER)
    header["magic"] = MAGIC
    header["version"] = VERSION
    header["dim"] = snapshot.dim
    header["n"] = snapshot.n
    header["fields"] = snapshot.field_count
    header["nu"] = snapshot.nu
    header["t"] = snapshot.t
    payload = np.ascontiguousarray(snapshot.coeffs, dtype=PAYLOAD)
    return header.tobytes() + payload.tobytes()


def decode(data, source="<bytes>"):
    if len(data) < HEADER.itemsize:
        raise SnapshotFormatError(f"{source}: truncated header ({len(data)} bytes).")
    header = np.frombuffer(data, dtype=HEADER, count=1)[0]
    if header["magic"] != MAGIC:
        raise SnapshotFormatError(f"{source}: bad magic {bytes(header['magic'])!r}, expected {MAGIC!r}.")
    if header["version"] != VERSION:
        raise SnapshotFormatError(
            f"{source}: unsupported snapshot version {int(header['version'])}, expected {VERSION}."
        )
    dim, n, fields = int(header["dim"]), int(header["n"]), int(header["fields"])
    if dim not in (2, 3) or n < 1 or fields < 1:
        raise SnapshotFormatError(f"{source}: invalid header dim={dim} n={n} fields={fields}.")
    shape = (fields,) + (n,) * dim
    expected = HEADER.itemsize + int(np.prod(shape)) * PAYLOAD.itemsize
    if len(data) < expected:
        raise SnapshotFormatError(f"{source}: truncated payload ({len(data)} of {expected} bytes).")
    if len(data) > expected:
        raise SnapshotFormatError(f"{source}: {len(data) - expected} trailing bytes after payload.")
    coeffs = np.frombuffer(data, dtype=PAYLOAD, offset=HEADER.itemsize).reshape(shape).copy()
    return Snapshot(dim, n, float(header["nu"]), float(header["t"]), coeffs)


def write_snapshot(snapshot, path):
    with open(path, "wb") as handle:
        handle.write(encode(snapshot))
    logger.info("Wrote snapshot %s (t=%.6g)", path, snapshot.t)


def read_snapshot(path):
    with open(path, "rb") as handle:
        data = handle.read()
    return decode(data, source=str(path))


def write_state(state, nu, t, path):
    write_snapshot(state_snapshot(state, nu, t), path)


def read_state(path, length=1.0):
    snapshot = read_snapshot(path)
    return snapshot.to_state(length), snapshot
