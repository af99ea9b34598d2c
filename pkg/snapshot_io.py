"""
Snapshot and Report I/O
BOFS binary field snapshots, diagnostics tables (CSV / JSON) and JSON reports
"""

import json
import logging
import os
from typing import Dict, Iterable, List

import numpy as np
import pandas as pd

from diagnostics import DiagnosticsRecord
from models import SimState
from spectral_core import Field, TorusGrid

logger = logging.getLogger(__name__)

MAGIC = b"BOFS"
VERSION = 1
HEADER_DTYPE = np.dtype([("magic", "S4"), ("version", "<u4"), ("n", "<u8"), ("length", "<f8"), ("t", "<f8")])
SAMPLE_DTYPE = np.dtype("<f8")

DIAGNOSTICS_COLUMNS = ["t", "mass", "l2", "hamiltonian", "hs_half", "tail_fraction", "sup_norm"]
FLOAT_FORMAT = "%.17g"


class SnapshotError(ValueError):
    """Unreadable BOFS snapshot"""


class NotASnapshotError(SnapshotError):
    def __init__(self, magic: bytes):
        super().__init__(f"not a snapshot: bad magic {magic!r}")


class SnapshotVersionError(SnapshotError):
    def __init__(self, version: int):
        super().__init__(f"snapshot version mismatch: got {version}, expected {VERSION}")


class TruncatedSnapshotError(SnapshotError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"truncated snapshot: expected {expected} bytes, got {got}")


def write_snapshot(state: SimState) -> bytes:
    """Header (magic, version u32, n u64, length f64, t f64) then n f64 samples, little-endian"""
    grid = state.u.grid
    header = np.array([(MAGIC, VERSION, grid.n, grid.length, state.t)], dtype=HEADER_DTYPE)
    return header.tobytes() + np.asarray(state.u.samples, dtype=SAMPLE_DTYPE).tobytes()


def read_snapshot(data: bytes) -> SimState:
    if len(data) < 4 or data[:4] != MAGIC:
        raise NotASnapshotError(bytes(data[:4]))
    if len(data) < HEADER_DTYPE.itemsize:
        raise TruncatedSnapshotError(HEADER_DTYPE.itemsize, len(data))
    header = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
    version = int(header["version"])
    if version != VERSION:
        raise SnapshotVersionError(version)
    n = int(header["n"])
    expected = HEADER_DTYPE.itemsize + n * SAMPLE_DTYPE.itemsize
    if len(data) < expected:
        raise TruncatedSnapshotError(expected, len(data))
    if len(data) > expected:
        raise SnapshotError(f"trailing bytes after snapshot: expected {expected}, got {len(data)}")
    samples = np.frombuffer(data, dtype=SAMPLE_DTYPE, count=n, offset=HEADER_DTYPE.itemsize)
    try:
        grid = TorusGrid(n, float(header["length"]))
    except ValueError as e:
        raise SnapshotError(f"invalid snapshot grid: {e}") from None
    return SimState(Field(grid, samples.astype(np.float64)), float(header["t"]))


def save_snapshot(path: str, state: SimState):
    with open(path, "wb") as handle:
        handle.write(write_snapshot(state))


def load_snapshot(path: str) -> SimState:
    with open(path, "rb") as handle:
        return read_snapshot(handle.read())


def snapshot_name(index: int) -> str:
    return f"snap_{index:05d}.bofs"


def save_trajectory_snapshots(directory: str, states: Iterable[SimState]) -> List[str]:
    os.makedirs(directory, exist_ok=True)
    paths = []
    for index, state in enumerate(states):
        path = os.path.join(directory, snapshot_name(index))
        save_snapshot(path, state)
        paths.append(path)
    logger.info(f"💾 [Snapshots] wrote {len(paths)} snapshots to {directory}")
    return paths


def load_snapshot_dir(directory: str) -> List[SimState]:
    """Every *.bofs file of a directory, in file-name order"""
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"snapshot directory not found: {directory}")
    names = sorted(name for name in os.listdir(directory) if name.endswith(".bofs"))
    return [load_snapshot(os.path.join(directory, name)) for name in names]


def diagnostics_frame(records: Iterable[DiagnosticsRecord]) -> pd.DataFrame:
    rows = [record.to_dict() for record in records]
    return pd.DataFrame(rows, columns=DIAGNOSTICS_COLUMNS).astype("float64")


def diagnostics_csv(traj) -> str:
    """One row per snapshot, 17 significant digits, empty hamiltonian cells where absent"""
    frame = diagnostics_frame(traj.records)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")


def diagnostics_json(traj) -> str:
    records: List[Dict] = [record.to_dict() for record in traj.records]
    return json.dumps({"model": traj.spec.label(), "blowup": traj.blowup,
                       "blowup_time": traj.blowup_time, "warnings": traj.warnings,
                       "records": records}, indent=2)


def write_text(path: str, text: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def write_report_json(path: str, report: Dict):
    write_text(path, json.dumps(report, indent=2))
    logger.info(f"📊 [Reports] wrote {path}")
