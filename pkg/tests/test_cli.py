import json
import subprocess
import sys

import numpy as np
import pytest

from memtest_sim.cli import EXIT_ANALYSIS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_PARSE, cmd_sweep, main
from memtest_sim.trace import read_csv

from conftest import SCENARIO_DIR
from oracles import threshold_amplitude, tanh_model_m


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), (json.loads(err) if err else None)


def scn(name):
    return SCENARIO_DIR / f"{name}.scn"


def write(tmp_path, text, name="s.scn"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoop:
    def test_fig1b(self, capsys, tmp_path):
        code, summary, _ = run(capsys, "loop", "--scenario", scn("fig1b"), "--out-dir", tmp_path)
        assert code == EXIT_OK
        assert summary["m_min"] == pytest.approx(0.5, abs=1e-9)
        assert summary["floor_holds"] is True
        assert summary["n_loops"] == 3
        on_disk = json.loads((tmp_path / "fig1b_summary.json").read_text())
        assert on_disk == summary

    def test_fig1c(self, capsys, tmp_path):
        code, summary, _ = run(capsys, "loop", "--scenario", scn("fig1c"), "--out-dir", tmp_path)
        assert code == EXIT_OK
        assert summary["m_max"] == pytest.approx(0.9999968, abs=1e-6)
        assert summary["m_max"] == pytest.approx(tanh_model_m(20 / 3, 0.0), abs=1e-12)
        assert summary["m_min"] == pytest.approx(0.0, abs=1e-9)
        assert summary["max_loop_deviation"] < 1e-9

    def test_loop_csv(self, capsys, tmp_path):
        run(capsys, "loop", "--scenario", scn("fig1c"), "--out-dir", tmp_path)
        lines = (tmp_path / "fig1c_loops.csv").read_text().splitlines()
        assert lines[0] == "loop,t,H,I,q,m,V_device"
        data = np.loadtxt(tmp_path / "fig1c_loops.csv", delimiter=",", skiprows=1)
        assert set(data[:, 0]) == {0.0, 1.0, 2.0}
        assert np.sum(data[:, 0] == 1.0) == 2001

    def test_no_out_dir_writes_nothing(self, capsys, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, summary, _ = run(capsys, "loop", "--scenario", scn("fig1c"))
        assert code == EXIT_OK and "files" not in summary
        assert list(tmp_path.iterdir()) == []

    def test_dt_override(self, capsys):
        code, summary, _ = run(capsys, "loop", "--scenario", scn("fig1c"), "--dt", 3.1415926535897933e-06 / 2)
        assert code == EXIT_OK and summary["n_loops"] == 3


class TestTimeseries:
    def test_tanh_model_timing(self, capsys, tmp_path):
        code, summary, _ = run(capsys, "timeseries", "--scenario", scn("fig2a"), "--out-dir", tmp_path)
        assert code == EXIT_OK
        assert summary["dt_over_T"] == pytest.approx(0.82, abs=0.02)
        peaks = json.loads((tmp_path / "fig2a_peaks.json").read_text())
        assert peaks["dt_over_T"] == summary["dt_over_T"]
        tr = read_csv(tmp_path / "fig2a_trace.csv")
        assert len(tr) == 6001

    def test_resistor_baseline(self, capsys):
        code, summary, _ = run(capsys, "timeseries", "--scenario", scn("resistor"))
        assert code == EXIT_OK
        assert summary["dt_over_T"] == pytest.approx(0.5, abs=0.01)

    def test_zero_amplitude(self, capsys, tmp_path):
        text = scn("fig2a").read_text().replace("drive.I0     = 1.0", "drive.I0     = 0.0")
        code, out, err = run(capsys, "timeseries", "--scenario", write(tmp_path, text))
        assert code == EXIT_ANALYSIS
        assert out is None
        assert err["error"] == "NoPeaksError" and err["exit_code"] == EXIT_ANALYSIS

    def test_needs_sine(self, capsys):
        code, _, err = run(capsys, "timeseries", "--scenario", scn("gedanken"))
        assert code == EXIT_PARSE and "sine" in err["message"]


class TestMemtest:
    def test_ideal_passes(self, capsys, tmp_path):
        code, summary, _ = run(capsys, "memtest", "--scenario", scn("ideal_memtest"), "--out-dir", tmp_path)
        assert code == EXIT_OK
        assert summary["verdict"] == "pass"
        assert json.loads((tmp_path / "ideal_memtest_verdict.json").read_text())["verdict"] == "pass"
        header = (tmp_path / "ideal_memtest_trace.csv").read_text().splitlines()[0]
        assert header == "t,I,V_device,q,m,phi,V_C"

    def test_tanh_model_passes(self, capsys):
        code, summary, _ = run(capsys, "memtest", "--scenario", scn("phi_memtest"))
        assert code == EXIT_OK and summary["verdict"] == "pass"

    def test_gedanken_fails(self, capsys):
        code, summary, _ = run(capsys, "memtest", "--scenario", scn("gedanken"))
        assert code == EXIT_FAIL
        assert summary["verdict"] == "fail"
        assert summary["charge_returned"] is True
        assert summary["delta_m"] == pytest.approx(2.0, abs=0.01)
        assert summary["I_max"] >= 3 * 0.01

    def test_short_tail_inconclusive(self, capsys):
        code, summary, _ = run(capsys, "memtest", "--scenario", scn("short_tail"))
        assert code == EXIT_INCONCLUSIVE
        assert summary["verdict"] == "inconclusive"
        assert summary["state_returned"] is None

    def test_needs_circuit(self, capsys):
        code, _, err = run(capsys, "memtest", "--scenario", scn("fig1c"))
        assert code == EXIT_PARSE and "circuit" in err["message"]

    def test_positivity_failure(self, capsys, tmp_path):
        text = """\
device.kind = phi_tanh
device.S_W = 1e-9
device.m0 = 0
device.K_phi = 1e-7
drive.kind = triangle
drive.V_peak = 10
drive.t_rise = 1e-4
drive.t_fall = 1e-4
sim.dt = 1e-7
circuit.C = 1e-6
"""
        code, _, err = run(capsys, "memtest", "--scenario", write(tmp_path, text))
        assert code == EXIT_ANALYSIS and err["error"] == "PositivityError"


class TestParseErrors:
    def test_malformed(self, capsys, tmp_path):
        code, out, err = run(capsys, "loop", "--scenario", write(tmp_path, "device.kind = phi_tanh\nbroken line\n"))
        assert code == EXIT_PARSE and out is None
        assert err["error"] == "ScenarioError"
        assert (err["line"], err["column"]) == (2, 1)

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "loop", "--scenario", tmp_path / "nope.scn")
        assert code == EXIT_PARSE and "cannot read" in err["message"]

    def test_invalid_parameter(self, capsys, tmp_path):
        text = scn("fig1c").read_text().replace("device.m0    = 0.0", "device.m0    = 1.0")
        code, _, err = run(capsys, "loop", "--scenario", write(tmp_path, text))
        assert code == EXIT_PARSE and "m0" in err["message"] and err["line"] == 5

    def test_step_too_coarse(self, capsys):
        code, _, err = run(capsys, "loop", "--scenario", scn("fig1c"), "--dt", 1e-5)
        assert code == EXIT_ANALYSIS and err["error"] == "StepSizeError"


class TestSweep:
    def test_matches_single_runs(self, capsys, tmp_path):
        code, result, _ = run(capsys, "sweep", "--scenario", scn("fig1c"), "--key", "device.m0",
                              "--values", "0, 0.5", "--out-dir", tmp_path)
        assert code == EXIT_OK
        assert [r["value"] for r in result] == [0.0, 0.5]
        _, single_c, _ = run(capsys, "loop", "--scenario", scn("fig1c"))
        _, single_b, _ = run(capsys, "loop", "--scenario", scn("fig1b"))
        for r, single in zip(result, (single_c, single_b)):
            assert r["exit_code"] == EXIT_OK
            for k in ("m_min", "m_max", "m_initial", "n_loops"):
                assert r["summary"][k] == single[k]
        assert json.loads((tmp_path / "fig1c_sweep.json").read_text()) == result

    def test_parallel_keeps_order(self):
        text = scn("fig1c").read_text()
        values = ["0.6", "0", "-0.3"]
        serial = cmd_sweep(text, "device.m0", values, "loop", {}, jobs=1)
        parallel = cmd_sweep(text, "device.m0", values, "loop", {}, jobs=3)
        assert serial == parallel
        assert [r["summary"]["m_initial"] for r in parallel] == pytest.approx([0.6, 0.0, -0.3], abs=1e-15)

    def test_threshold_amplitude_flips_verdict(self):
        v_star = threshold_amplitude(0.01, 1e-6, 1.0, 5e-6)
        res = cmd_sweep(scn("gedanken").read_text(), "drive.V_peak", [repr(0.5 * v_star), repr(2 * v_star)],
                        "memtest", {})
        assert [r["exit_code"] for r in res] == [EXIT_OK, EXIT_FAIL]
        assert [r["summary"]["verdict"] for r in res] == ["pass", "fail"]

    def test_per_value_errors_are_reported(self):
        res = cmd_sweep(scn("fig1c").read_text(), "device.m0", ["0", "2"], "loop", {})
        assert [r["exit_code"] for r in res] == [EXIT_OK, EXIT_PARSE]
        assert "m0" in res[1]["summary"]["message"]

    def test_empty_values(self, capsys):
        code, _, err = run(capsys, "sweep", "--scenario", scn("fig1c"), "--key", "device.m0", "--values", "")
        assert code == EXIT_PARSE and "empty" in err["message"]

    def test_non_numeric_key(self, capsys):
        code, _, err = run(capsys, "sweep", "--scenario", scn("fig1c"), "--key", "output.name", "--values", "1")
        assert code == EXIT_PARSE

    def test_non_numeric_value(self, capsys):
        code, _, err = run(capsys, "sweep", "--scenario", scn("fig1c"), "--key", "device.m0", "--values", "a")
        assert code == EXIT_PARSE and "'a'" in err["message"]

    def test_missing_key(self, capsys):
        code, _, _ = run(capsys, "sweep", "--scenario", scn("fig1c"), "--values", "1")
        assert code == EXIT_PARSE


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "memtest_sim", "loop", "--scenario", str(scn("fig1b"))],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["m_min"] == pytest.approx(0.5, abs=1e-9)
