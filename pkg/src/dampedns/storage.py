"""Result persistence: diagnostics CSV and binary field snapshots.

Diagnostics go to CSV with a fixed column order and 17-significant-digit
decimal floats, so a read-back reproduces every value bit-exactly.
Snapshots are self-describing binary: a fixed little-endian header (grid,
time, physics, payload checksum) followed by the retained spectral
coefficients, component-major and k-lexicographic, as float64 real/imag
pairs. Restarting from a snapshot continues a run bit-identically.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRecord, fill_dEdt
from .fields import SpectralVelocity
from .grid import WaveGrid
from .timestepping import Physics, SolverState

__all__ = [
    "StorageError",
    "write_diagnostics",
    "read_diagnostics",
    "DiagnosticsWriter",
    "SnapshotHeader",
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
    "write_snapshot",
    "read_snapshot",
    "read_snapshot_header",
    "check_restart_compatible",
]


class StorageError(RuntimeError):
    """Persistence failure (I/O, format, integrity)."""


def _fmt(v: float) -> str:
    return format(v, ".17g")


# ----------------------------------------------------------------------
# diagnostics CSV
# ----------------------------------------------------------------------

def _mark_partial(path: str | Path) -> None:
    try:
        Path(str(path) + ".partial").touch()
    except OSError:
        pass


def write_diagnostics(records: list[DiagnosticsRecord], path: str | Path) -> None:
    """Write records as CSV; fills dEdt in place first (idempotent)."""
    fill_dEdt(records)
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for r in records:
                fh.write(",".join(_fmt(v) for v in r.astuple()) + "\n")
    except OSError as exc:
        _mark_partial(path)
        raise StorageError(f"diagnostics write to {path} failed: {exc}") from exc


def read_diagnostics(path: str | Path) -> list[DiagnosticsRecord]:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise StorageError(f"cannot read diagnostics {path}: {exc}") from exc
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise StorageError(f"{path} is not a diagnostics CSV (bad header)")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise StorageError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} columns")
        records.append(DiagnosticsRecord(*(float(p) for p in parts)))
    return records


class DiagnosticsWriter:
    """Streaming CSV writer with a one-record lag.

    A row is flushed once its successor arrives so the centered dEdt can be
    filled; close() flushes the final row with a one-sided difference. The
    emitted file is identical to a batch :func:`write_diagnostics` of the
    same records.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._pending: DiagnosticsRecord | None = None
        self._written_e: float | None = None
        self._written_t: float | None = None
        try:
            self._fh = open(path, "w", newline="\n")
            self._fh.write(",".join(CSV_COLUMNS) + "\n")
            self._fh.flush()
        except OSError as exc:
            _mark_partial(path)
            raise StorageError(f"cannot open diagnostics stream {path}: {exc}") from exc

    def _emit(self, rec: DiagnosticsRecord) -> None:
        try:
            self._fh.write(",".join(_fmt(v) for v in rec.astuple()) + "\n")
            self._fh.flush()
        except (OSError, ValueError) as exc:
            _mark_partial(self.path)
            raise StorageError(f"diagnostics stream {self.path} failed: {exc}") from exc
        self._written_e = rec.E
        self._written_t = rec.t

    def append(self, rec: DiagnosticsRecord) -> None:
        if self._pending is not None:
            prev = self._pending
            if self._written_t is None:
                prev.dEdt = (rec.E - prev.E) / (rec.t - prev.t)
            else:
                prev.dEdt = (rec.E - self._written_e) / (rec.t - self._written_t)
            self._emit(prev)
        self._pending = rec

    def close(self) -> None:
        if self._pending is not None:
            last = self._pending
            if self._written_t is None:
                last.dEdt = 0.0
            else:
                last.dEdt = (last.E - self._written_e) / (last.t - self._written_t)
            self._emit(last)
            self._pending = None
        self._fh.close()

    def __enter__(self) -> "DiagnosticsWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# ----------------------------------------------------------------------
# binary snapshots
# ----------------------------------------------------------------------

SNAPSHOT_MAGIC = b"DNSNAP01"
SNAPSHOT_VERSION = 1
_HEADER_FMT = "<8sIIdddddQdII"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)


@dataclass(frozen=True)
class SnapshotHeader:
    magic: bytes
    version: int
    n: int
    length: float
    t: float
    mu: float
    alpha: float
    beta: float
    step_count: int
    last_dt: float
    n_modes: int
    checksum: int


def _mode_order(grid: WaveGrid) -> tuple[np.ndarray, np.ndarray]:
    """Gather map for the payload: retained full modes in (m1, m2, m3)
    lexicographic order, as flat indices into the half-spectrum plus a
    conjugation flag for modes with m3 < 0."""
    n, nk = grid.n, grid.nk
    m = grid.modes
    keep1 = np.abs(m) < n / 3.0
    m1, m2, m3 = np.meshgrid(m[keep1], m[keep1], m[keep1], indexing="ij")
    m1, m2, m3 = m1.ravel(), m2.ravel(), m3.ravel()
    order = np.lexsort((m3, m2, m1))
    m1, m2, m3 = m1[order], m2[order], m3[order]
    conj = m3 < 0
    i1 = np.where(conj, -m1, m1) % n
    i2 = np.where(conj, -m2, m2) % n
    i3 = np.where(conj, -m3, m3)
    flat = (i1 * n + i2) * nk + i3
    return flat, conj


def write_snapshot(state: SolverState, physics: Physics, path: str | Path) -> None:
    """Serialize a solver state; the header makes the file self-describing."""
    grid = state.u.grid
    flat, conj = _mode_order(grid)
    vals = state.u.coeffs.reshape(3, -1)[:, flat]
    vals[:, conj] = np.conj(vals[:, conj])
    payload = np.empty(vals.shape + (2,), dtype="<f8")
    payload[..., 0] = vals.real
    payload[..., 1] = vals.imag
    blob = payload.tobytes()
    header = struct.pack(
        _HEADER_FMT, SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
        grid.n, grid.length, state.t,
        physics.mu, physics.alpha, physics.beta,
        state.step_count, state.last_dt,
        flat.size, zlib.crc32(blob),
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(blob)
    except OSError as exc:
        raise StorageError(f"snapshot write to {path} failed: {exc}") from exc


def read_snapshot_header(path: str | Path) -> SnapshotHeader:
    try:
        with open(path, "rb") as fh:
            raw = fh.read(_HEADER_SIZE)
    except OSError as exc:
        raise StorageError(f"cannot read snapshot {path}: {exc}") from exc
    if len(raw) < _HEADER_SIZE:
        raise StorageError(f"{path}: truncated snapshot header")
    fields = struct.unpack(_HEADER_FMT, raw)
    header = SnapshotHeader(*fields)
    if header.magic != SNAPSHOT_MAGIC:
        raise StorageError(f"{path}: not a snapshot file (bad magic)")
    if header.version > SNAPSHOT_VERSION:
        raise StorageError(f"{path}: snapshot format version {header.version} is newer than supported {SNAPSHOT_VERSION}")
    return header


def read_snapshot(path: str | Path) -> tuple[SolverState, SnapshotHeader]:
    """Reconstruct a solver state; integrity is verified before returning.

    The grid and physics are rebuilt from the header alone. A checksum or
    format mismatch raises StorageError and no partial state escapes.
    """
    header = read_snapshot_header(path)
    try:
        with open(path, "rb") as fh:
            fh.seek(_HEADER_SIZE)
            blob = fh.read()
    except OSError as exc:
        raise StorageError(f"cannot read snapshot {path}: {exc}") from exc
    expected = 3 * header.n_modes * 2 * 8
    if len(blob) != expected:
        raise StorageError(f"{path}: payload is {len(blob)} bytes, expected {expected}")
    if zlib.crc32(blob) != header.checksum:
        raise StorageError(f"{path}: checksum mismatch (corrupted snapshot)")

    grid = WaveGrid(header.n, header.length)
    flat, conj = _mode_order(grid)
    if flat.size != header.n_modes:
        raise StorageError(f"{path}: mode count {header.n_modes} does not match grid n={header.n}")
    payload = np.frombuffer(blob, dtype="<f8").reshape(3, header.n_modes, 2)
    vals = payload[..., 0] + 1j * payload[..., 1]
    coeffs = np.zeros((3, grid.n * grid.n * grid.nk), np.complex128)
    stored = ~conj
    coeffs[:, flat[stored]] = vals[:, stored]
    u = SpectralVelocity(grid, coeffs.reshape(grid.shape()))
    state = SolverState(t=header.t, u=u, step_count=header.step_count, last_dt=header.last_dt)
    return state, header


def check_restart_compatible(header: SnapshotHeader, grid: WaveGrid, physics: Physics) -> None:
    """Reject restarts whose grid or physics differ from the snapshot."""
    if header.n != grid.n or header.length != grid.length:
        raise StorageError(
            f"grid mismatch on restart: snapshot has n={header.n}, L={header.length}, "
            f"run has n={grid.n}, L={grid.length}"
        )
    for name, a, b in (("mu", header.mu, physics.mu),
                       ("alpha", header.alpha, physics.alpha),
                       ("beta", header.beta, physics.beta)):
        if a != b:
            raise StorageError(f"physics mismatch on restart: snapshot {name}={a}, run {name}={b}")
