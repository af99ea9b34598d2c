"""
Tests for the bo_lab command line: subcommands, output files and exit codes
"""

import json
import math
import os

import pytest

from bo_lab import EXIT_BLOWUP, EXIT_INVALID, EXIT_OK, cli_main

GAUSSIAN_RUN = """\
model = bo
grid.n = 256
grid.length = 50
time.dt = 1e-2
time.t_final = 0.05
ic.kind = gaussian
ic.params = 1, 0, 2
out.dir = {out}
"""

BLOWUP_RUN = """\
model = general_linear
j = 0
a0 = -1e4
b = 1
grid.n = 64
grid.length = 6.283185307179586
time.dt = 1e-5
time.t_final = 0.01
ic.kind = modes
ic.params = 1, 0, 1
out.dir = {out}
"""

BUMP_PROBE = """\
model = bo
grid.n = 1024
grid.length = 20
time.dt = 1e-3
time.t_final = 0
ic.kind = bump
ic.params = 1, 0, 1
probe.interval = 2, 3
probe.x0 = 0
probe.radii = 0.3, 0.25, 0.2, 0.15, 0.1
out.dir = {out}
"""


@pytest.fixture
def out(tmp_path):
    return str(tmp_path / "out")


class TestSimulate:
    def test_writes_all_outputs(self, write_config, out):
        code = cli_main(["simulate", write_config(GAUSSIAN_RUN.format(out=out))])
        assert code == EXIT_OK
        for name in ("diagnostics.csv", "diagnostics.json", "run.cfg"):
            assert os.path.isfile(os.path.join(out, name))
        snapshots = sorted(os.listdir(os.path.join(out, "snapshots")))
        assert snapshots[0] == "snap_00000.bofs"
        assert len(snapshots) == 6

    def test_blowup_exit_code_keeps_partial_output(self, write_config, out):
        code = cli_main(["simulate", write_config(BLOWUP_RUN.format(out=out))])
        assert code == EXIT_BLOWUP
        payload = json.loads(open(os.path.join(out, "diagnostics.json"), encoding="utf-8").read())
        assert payload["blowup"] is True
        assert payload["blowup_time"] < 0.01

    def test_invalid_config(self, write_config, out):
        text = GAUSSIAN_RUN.format(out=out).replace("grid.n = 256", "grid.n = 255")
        assert cli_main(["simulate", write_config(text)]) == EXIT_INVALID

    def test_missing_config(self, tmp_path):
        assert cli_main(["simulate", str(tmp_path / "absent.cfg")]) == EXIT_INVALID


class TestResidual:
    def test_finds_run_cfg_beside_snapshots(self, write_config, out, capsys):
        assert cli_main(["simulate", write_config(GAUSSIAN_RUN.format(out=out))]) == EXIT_OK
        capsys.readouterr()
        code = cli_main(["residual", os.path.join(out, "snapshots")])
        assert code == EXIT_OK
        value = float(capsys.readouterr().out.strip())
        assert math.isfinite(value)
        assert value >= 0.0

    def test_explicit_config(self, write_config, out, capsys):
        config = write_config(GAUSSIAN_RUN.format(out=out))
        assert cli_main(["simulate", config]) == EXIT_OK
        os.remove(os.path.join(out, "run.cfg"))
        assert cli_main(["residual", os.path.join(out, "snapshots")]) == EXIT_INVALID
        assert cli_main(["residual", os.path.join(out, "snapshots"), "--config", config]) == EXIT_OK

    def test_missing_directory(self, write_config, tmp_path):
        config = write_config(GAUSSIAN_RUN.format(out=tmp_path))
        assert cli_main(["residual", str(tmp_path / "none"), "--config", config]) == EXIT_INVALID


class TestLimits:
    def test_deep_water_report(self, write_config, out):
        text = GAUSSIAN_RUN.format(out=out) + "limits.deltas = 1, 10\n"
        assert cli_main(["limits", "deep", write_config(text)]) == EXIT_OK
        report = json.loads(open(os.path.join(out, "limit_report.json"), encoding="utf-8").read())
        assert report["pair"] == "ilw->bo"
        assert len(report["errors"]) == 2

    def test_needs_deltas(self, write_config, out):
        assert cli_main(["limits", "deep", write_config(GAUSSIAN_RUN.format(out=out))]) == EXIT_INVALID

    def test_wrong_order_is_invalid(self, write_config, out):
        text = GAUSSIAN_RUN.format(out=out) + "limits.deltas = 1, 10\n"
        assert cli_main(["limits", "shallow", write_config(text)]) == EXIT_INVALID


class TestProbe:
    def test_probe_report(self, write_config, out):
        assert cli_main(["probe", write_config(BUMP_PROBE.format(out=out))]) == EXIT_OK
        report = json.loads(open(os.path.join(out, "probe_report.json"), encoding="utf-8").read())
        assert report["uc_probe"]["verdict"] == "consistent-with-uniqueness"
        assert report["vanishing_order"]["slope"] == pytest.approx(1.0, abs=0.2)

    def test_probe_needs_interval_or_radii(self, write_config, out):
        assert cli_main(["probe", write_config(GAUSSIAN_RUN.format(out=out))]) == EXIT_INVALID


class TestArguments:
    def test_unknown_subcommand(self):
        assert cli_main(["explode"]) == EXIT_INVALID

    def test_help(self, capsys):
        assert cli_main(["--help"]) == EXIT_OK
        assert "simulate" in capsys.readouterr().out
