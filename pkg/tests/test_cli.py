import json

import numpy as np
import pytest

import multiport as mp
from multiport import formats
from multiport.cli import main

from devices import characterized_mmi_4x4


def run(args):
    return main(args)


@pytest.fixture
def matrix_2x2(tmp_path):
    path = tmp_path / "m2.json"
    assert run(["ideal", "--kind", "2x2", "--out", str(path)]) == 0
    return path


@pytest.fixture
def matrix_4x4_theta0(tmp_path):
    path = tmp_path / "m4.json"
    assert run(["ideal", "--kind", "4x4", "--theta", "0", "--out", str(path)]) == 0
    return path


class TestIdeal:
    def test_2x2_payload(self, matrix_2x2):
        m = formats.matrix_from_dict(formats.read_json(matrix_2x2))
        assert np.allclose(m.entries, mp.ideal_2x2().entries)

    def test_4x4_theta0(self, matrix_4x4_theta0):
        m = formats.matrix_from_dict(formats.read_json(matrix_4x4_theta0))
        assert np.allclose(m.entries, mp.ideal_4x4(0.0).entries)

    def test_missing_theta_is_usage_error(self, tmp_path):
        assert run(["ideal", "--kind", "4x4", "--out", str(tmp_path / "x.json")]) == 1

    def test_theta_with_2x2_is_usage_error(self, tmp_path):
        assert run(["ideal", "--kind", "2x2", "--theta", "1", "--out", str(tmp_path / "x.json")]) == 1

    def test_unknown_flag_rejected(self):
        assert run(["ideal", "--kind", "2x2", "--bogus", "1"]) == 1


class TestVisibility:
    def test_2x2_unit_cell(self, matrix_2x2, tmp_path):
        out = tmp_path / "v.json"
        assert run(["visibility", "--matrix", str(matrix_2x2), "--out", str(out)]) == 0
        vis = formats.visibility_from_dict(formats.read_json(out))
        assert vis.values[0, 0] == 1.0

    def test_4x4_theta0_first_cell(self, matrix_4x4_theta0, tmp_path):
        out = tmp_path / "v.json"
        assert run(["visibility", "--matrix", str(matrix_4x4_theta0), "--out", str(out)]) == 0
        vis = formats.visibility_from_dict(formats.read_json(out))
        assert vis.value((1, 2), (1, 2)) == pytest.approx(-1.0, abs=1e-12)

    def test_truncated_file_is_data_error(self, matrix_2x2, tmp_path):
        broken = tmp_path / "broken.json"
        broken.write_text(matrix_2x2.read_text()[:40])
        assert run(["visibility", "--matrix", str(broken), "--out", str(tmp_path / "v.json")]) == 2

    def test_missing_file_is_data_error(self, tmp_path):
        assert run(["visibility", "--matrix", str(tmp_path / "nope.json"), "--out", "-"]) == 2


class TestDistribution:
    def test_hom_halves(self, matrix_2x2, tmp_path):
        out = tmp_path / "d.json"
        assert run(["distribution", "--matrix", str(matrix_2x2), "--input", "1,1", "--out", str(out)]) == 0
        payload = formats.read_json(out)
        outcomes = {tuple(o["configuration"]): o["probability"] for o in payload["outcomes"]}
        assert outcomes[(2, 0)] == pytest.approx(0.5, abs=1e-12)
        assert outcomes[(1, 1)] == pytest.approx(0.0, abs=1e-12)
        configs = [tuple(o["configuration"]) for o in payload["outcomes"]]
        assert configs == sorted(configs)

    def test_photon_bound_is_data_error(self, matrix_2x2, tmp_path):
        assert run([
            "distribution", "--matrix", str(matrix_2x2), "--input", "4,3",
            "--out", str(tmp_path / "d.json"),
        ]) == 2


class TestDip:
    def test_synthesize_then_fit_round_trip(self, matrix_2x2, tmp_path):
        trace = tmp_path / "trace.csv"
        fit_out = tmp_path / "fit.json"
        assert run([
            "dip", "--matrix", str(matrix_2x2), "--inputs", "1,2", "--outputs", "1,2",
            "--filters", "2,2", "--scale", "2000", "--out", str(trace),
        ]) == 0
        assert run(["dip", "--fit", str(trace), "--out", str(fit_out)]) == 0
        fit = formats.read_json(fit_out)
        assert fit["visibility"] == pytest.approx(1.0, abs=1e-6)

    def test_narrow_filters_give_expected_width(self, matrix_2x2, tmp_path):
        trace = tmp_path / "trace.csv"
        fit_out = tmp_path / "fit.json"
        assert run([
            "dip", "--matrix", str(matrix_2x2), "--filters", "0.5,0.5",
            "--delay-min", "-2000", "--delay-max", "2000", "--points", "161",
            "--out", str(trace),
        ]) == 0
        assert run(["dip", "--fit", str(trace), "--out", str(fit_out)]) == 0
        fit = formats.read_json(fit_out)
        assert fit["fwhm_um"] == pytest.approx(806.794, abs=5.0)

    def test_correct_accidentals_flag(self, matrix_2x2, tmp_path):
        trace = tmp_path / "trace.csv"
        assert run([
            "dip", "--matrix", str(matrix_2x2), "--accidental-rate", "50",
            "--scale", "2000", "--out", str(trace),
        ]) == 0
        fit_out = tmp_path / "fit.json"
        assert run(["dip", "--fit", str(trace), "--correct-accidentals", "--out", str(fit_out)]) == 0
        fit = formats.read_json(fit_out)
        assert fit["visibility"] == pytest.approx(1.0, abs=1e-6)

    def test_both_modes_is_usage_error(self, matrix_2x2, tmp_path):
        assert run(["dip", "--matrix", str(matrix_2x2), "--fit", "x.csv"]) == 1

    def test_neither_mode_is_usage_error(self):
        assert run(["dip"]) == 1

    def test_missing_csv_is_data_error(self, tmp_path):
        assert run(["dip", "--fit", str(tmp_path / "nope.csv")]) == 2


class TestReconstruct:
    def _write_inputs(self, tmp_path, matrix):
        vis = mp.visibility_matrix(matrix)
        vis_path = tmp_path / "vis.json"
        mag_path = tmp_path / "mag.json"
        formats.write_json(vis_path, formats.visibility_to_dict(vis))
        formats.write_json(
            mag_path, formats.magnitudes_to_dict(mp.MagnitudeGrid(np.abs(matrix.entries)))
        )
        return vis_path, mag_path

    def test_round_trip_objective(self, tmp_path):
        u = mp.random_unitary(4, 424)
        vis_path, mag_path = self._write_inputs(tmp_path, u)
        out = tmp_path / "result.json"
        assert run([
            "reconstruct", "--visibilities", str(vis_path), "--magnitudes", str(mag_path),
            "--starts", "10", "--seed", "0", "--out", str(out),
        ]) == 0
        payload = formats.read_json(out)
        assert payload["objective"] < 1e-6
        assert payload["options"]["starts"] == 10
        recovered = formats.matrix_from_dict(payload["matrix"])
        assert mp.gauge_equivalent(recovered, u, 1e-3)

    def test_fixture_recovery(self, tmp_path):
        fixture = characterized_mmi_4x4()
        vis_path, mag_path = self._write_inputs(tmp_path, fixture)
        out = tmp_path / "result.json"
        assert run([
            "reconstruct", "--visibilities", str(vis_path), "--magnitudes", str(mag_path),
            "--starts", "20", "--seed", "0", "--out", str(out),
        ]) == 0
        payload = formats.read_json(out)
        recovered = formats.matrix_from_dict(payload["matrix"])
        assert mp.gauge_equivalent(recovered, fixture, 1e-3)

    def test_zero_starts_is_usage_error(self, tmp_path):
        u = mp.random_unitary(4, 1)
        vis_path, mag_path = self._write_inputs(tmp_path, u)
        assert run([
            "reconstruct", "--visibilities", str(vis_path), "--magnitudes", str(mag_path),
            "--starts", "0", "--out", str(tmp_path / "r.json"),
        ]) == 1

    def test_dimension_mismatch_is_usage_error(self, tmp_path):
        u = mp.random_unitary(4, 2)
        vis_path, _ = self._write_inputs(tmp_path, u)
        mag_path = tmp_path / "mag2.json"
        formats.write_json(mag_path, {"values": [[0.7, 0.7], [0.7, 0.7]]})
        assert run([
            "reconstruct", "--visibilities", str(vis_path), "--magnitudes", str(mag_path),
            "--out", str(tmp_path / "r.json"),
        ]) == 1

    def test_accept_threshold_controls_exit(self, tmp_path):
        u = mp.random_unitary(4, 3)
        vis_path, mag_path = self._write_inputs(tmp_path, u)
        ok = run([
            "reconstruct", "--visibilities", str(vis_path), "--magnitudes", str(mag_path),
            "--starts", "10", "--accept-threshold", "1e-6", "--out", str(tmp_path / "a.json"),
        ])
        assert ok == 0
        bad = run([
            "reconstruct", "--visibilities", str(vis_path), "--magnitudes", str(mag_path),
            "--starts", "1", "--seed", "8", "--accept-threshold", "1e-30",
            "--out", str(tmp_path / "b.json"),
        ])
        assert bad == 3


class TestReport:
    def test_report_prints_table(self, tmp_path, capsys):
        u = mp.ideal_4x4(0.6)
        vis = mp.visibility_matrix(u)
        vis_path = tmp_path / "vis.json"
        mag_path = tmp_path / "mag.json"
        result_path = tmp_path / "result.json"
        formats.write_json(vis_path, formats.visibility_to_dict(vis))
        formats.write_json(mag_path, formats.magnitudes_to_dict(mp.MagnitudeGrid(np.abs(u.entries))))
        assert run([
            "reconstruct", "--visibilities", str(vis_path), "--magnitudes", str(mag_path),
            "--starts", "10", "--out", str(result_path),
        ]) == 0
        report_json = tmp_path / "report.json"
        assert run([
            "report", "--result", str(result_path), "--measured", str(vis_path),
            "--out", str(report_json),
        ]) == 0
        captured = capsys.readouterr()
        assert "objective" in captured.out
        assert captured.out.count("(1,2)") >= 2
        payload = formats.read_json(report_json)
        assert len(payload["residual_table"]) == 36


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        u = mp.random_unitary(4, 99)
        vis = mp.visibility_matrix(u)
        vis_path = tmp_path / "vis.json"
        mag_path = tmp_path / "mag.json"
        formats.write_json(vis_path, formats.visibility_to_dict(vis))
        formats.write_json(mag_path, formats.magnitudes_to_dict(mp.MagnitudeGrid(np.abs(u.entries))))
        ideal_path = tmp_path / "ideal.json"
        assert run(["ideal", "--kind", "4x4", "--theta", "0.37", "--out", str(ideal_path)]) == 0

        commands = {
            "ideal.json": ["ideal", "--kind", "4x4", "--theta", "0.37"],
            "vis.json": ["visibility", "--matrix", str(ideal_path)],
            "trace.csv": [
                "dip", "--matrix", str(ideal_path),
                "--noise-seed", "7", "--accidental-rate", "3",
            ],
            "dist.json": [
                "distribution", "--matrix", str(ideal_path),
                "--input", "1,1,0,0",
            ],
            "result.json": [
                "reconstruct", "--visibilities", str(vis_path),
                "--magnitudes", str(mag_path), "--starts", "6", "--seed", "4",
            ],
        }
        for filename, argv in commands.items():
            first = tmp_path / f"a_{filename}"
            second = tmp_path / f"b_{filename}"
            assert run(argv + ["--out", str(first)]) == 0
            assert run(argv + ["--out", str(second)]) == 0
            assert first.read_bytes() == second.read_bytes(), filename

    def test_worker_count_does_not_change_payload(self, tmp_path):
        u = mp.random_unitary(4, 123)
        vis = mp.visibility_matrix(u)
        vis_path = tmp_path / "vis.json"
        mag_path = tmp_path / "mag.json"
        formats.write_json(vis_path, formats.visibility_to_dict(vis))
        formats.write_json(mag_path, formats.magnitudes_to_dict(mp.MagnitudeGrid(np.abs(u.entries))))
        payloads = []
        for workers in ("1", "2", "5"):
            out = tmp_path / f"r{workers}.json"
            assert run([
                "reconstruct", "--visibilities", str(vis_path), "--magnitudes", str(mag_path),
                "--starts", "8", "--seed", "2", "--workers", workers, "--out", str(out),
            ]) == 0
            payloads.append(out.read_bytes())
        assert payloads[0] == payloads[1] == payloads[2]


def test_stdout_output(capsys):
    assert run(["ideal", "--kind", "2x2"]) == 0
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert payload["n_inputs"] == 2
    assert "config:" in captured.err


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "multiport", "ideal", "--kind", "2x2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n_inputs"] == 2
