"""
Tests for BOFS snapshots and the diagnostics / report writers
"""

import io
import json
import math
import struct

import numpy as np
import pandas as pd
import pytest

from models import EquationSpec, SimState
from snapshot_io import (
    HEADER_DTYPE,
    NotASnapshotError,
    SnapshotError,
    SnapshotVersionError,
    TruncatedSnapshotError,
    diagnostics_csv,
    diagnostics_json,
    load_snapshot,
    load_snapshot_dir,
    read_snapshot,
    save_snapshot,
    save_trajectory_snapshots,
    snapshot_name,
    write_report_json,
    write_snapshot,
)
from spectral_core import Field, make_grid
from timestep import IntegratorConfig, run


@pytest.fixture
def state(grid_64):
    return SimState(Field(grid_64, np.sin(grid_64.points) + 0.1), 0.375)


class TestBinaryLayout:
    def test_header_is_32_bytes(self):
        assert HEADER_DTYPE.itemsize == 32

    def test_little_endian_fields(self, state):
        data = write_snapshot(state)
        assert len(data) == 32 + 8 * 64
        magic, version, n, length, t = struct.unpack("<4sIQdd", data[:32])
        assert magic == b"BOFS"
        assert version == 1
        assert n == 64
        assert length == state.u.grid.length
        assert t == 0.375
        first = struct.unpack("<d", data[32:40])[0]
        assert first == state.u.samples[0]

    def test_read_back_bit_exact(self, state):
        back = read_snapshot(write_snapshot(state))
        assert back.t == state.t
        assert back.u.grid == state.u.grid
        np.testing.assert_array_equal(back.u.samples, state.u.samples)


class TestBadSnapshots:
    def test_bad_magic(self, state):
        data = b"XXXX" + write_snapshot(state)[4:]
        with pytest.raises(NotASnapshotError, match="not a snapshot"):
            read_snapshot(data)

    def test_empty(self):
        with pytest.raises(NotASnapshotError):
            read_snapshot(b"")

    def test_version_mismatch(self, state):
        data = bytearray(write_snapshot(state))
        data[4:8] = struct.pack("<I", 2)
        with pytest.raises(SnapshotVersionError, match="version mismatch"):
            read_snapshot(bytes(data))

    def test_truncated_samples(self, state):
        with pytest.raises(TruncatedSnapshotError, match="truncated snapshot"):
            read_snapshot(write_snapshot(state)[:-8])

    def test_truncated_header(self, state):
        with pytest.raises(TruncatedSnapshotError):
            read_snapshot(write_snapshot(state)[:20])

    def test_trailing_bytes(self, state):
        with pytest.raises(SnapshotError, match="trailing bytes"):
            read_snapshot(write_snapshot(state) + b"\x00")

    def test_invalid_grid(self, state):
        data = bytearray(write_snapshot(state))
        data[16:24] = struct.pack("<d", -1.0)
        with pytest.raises(SnapshotError, match="invalid snapshot grid"):
            read_snapshot(bytes(data))


class TestFiles:
    def test_save_and_load(self, tmp_path, state):
        path = str(tmp_path / "one.bofs")
        save_snapshot(path, state)
        np.testing.assert_array_equal(load_snapshot(path).u.samples, state.u.samples)

    def test_directory_in_name_order(self, tmp_path, grid_64):
        states = [SimState(Field(grid_64, np.full(64, float(i))), 0.1 * i) for i in range(12)]
        paths = save_trajectory_snapshots(str(tmp_path / "snaps"), states)
        assert paths[3].endswith(snapshot_name(3))
        assert snapshot_name(11) == "snap_00011.bofs"
        loaded = load_snapshot_dir(str(tmp_path / "snaps"))
        assert [s.t for s in loaded] == [s.t for s in states]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="snapshot directory not found"):
            load_snapshot_dir(str(tmp_path / "nowhere"))


class TestDiagnosticsOutput:
    @pytest.fixture
    def trajectory(self, gaussian):
        return run(gaussian, EquationSpec.bo(), IntegratorConfig(dt=0.01, t_final=0.03))

    def test_csv_columns_and_precision(self, trajectory):
        text = diagnostics_csv(trajectory)
        lines = text.splitlines()
        assert lines[0] == "t,mass,l2,hamiltonian,hs_half,tail_fraction,sup_norm"
        assert len(lines) == 1 + len(trajectory)
        frame = pd.read_csv(io.StringIO(text), float_precision="round_trip")
        # 17 significant digits reproduce every double
        assert frame["l2"].tolist() == [r.l2 for r in trajectory.records]
        assert frame["hamiltonian"].tolist() == [r.hamiltonian for r in trajectory.records]

    def test_empty_cells_without_hamiltonian(self, gaussian):
        trajectory = run(gaussian, EquationSpec.ilw(1.0), IntegratorConfig(dt=0.01, t_final=0.01))
        row = diagnostics_csv(trajectory).splitlines()[1].split(",")
        assert row[3] == ""

    def test_json(self, trajectory):
        payload = json.loads(diagnostics_json(trajectory))
        assert payload["model"] == "bo"
        assert payload["blowup"] is False
        assert len(payload["records"]) == len(trajectory)
        assert math.isclose(payload["records"][-1]["t"], 0.03)

    def test_report_json_creates_directories(self, tmp_path):
        path = tmp_path / "deep" / "er" / "report.json"
        write_report_json(str(path), {"verdict": "ok"})
        assert json.loads(path.read_text()) == {"verdict": "ok"}

    def test_grid_restored_from_header(self, tmp_path):
        grid = make_grid(16, 3.0)
        path = str(tmp_path / "g.bofs")
        save_snapshot(path, SimState(Field(grid, np.arange(16.0)), 0.0))
        assert load_snapshot(path).u.grid == grid
