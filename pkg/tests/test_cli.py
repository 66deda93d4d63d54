"""Command-line behavior: formats, exit codes, and end-to-end chains."""

import hashlib
import json
import os

import numpy as np
import pytest

from levitherm.cli import main
from levitherm.dataio import write_calibration_csv, write_heating_csv
from levitherm.fitting import ZfsPolynomial
from levitherm.physics import zfs_slope


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run_cli(capsys, *argv)
    return code, json.loads(out)


def dir_digests(d):
    return {
        name: hashlib.sha256(open(os.path.join(d, name), "rb").read()).hexdigest()
        for name in sorted(os.listdir(d))
    }


class TestSensitivity:
    def test_default_inputs_give_published_scale(self, capsys):
        code, payload = run_json(capsys, "sensitivity")
        assert code == 0
        assert round(payload["eta_t_k_per_sqrt_hz"], 2) == 4.32
        assert 3.0 <= payload["eta_t_k_per_sqrt_hz"] <= 6.0

    def test_slope_derived_from_temperature(self, capsys):
        code, payload = run_json(capsys, "sensitivity", "--temperature-k", "294")
        assert code == 0
        assert payload["slope_hz_per_k"] == pytest.approx(zfs_slope(ZfsPolynomial(), 294.0))
        expected = 10e6 / (0.07 * np.sqrt(2e5) * abs(payload["slope_hz_per_k"]))
        assert payload["eta_t_k_per_sqrt_hz"] == pytest.approx(expected)

    def test_csv_format(self, capsys):
        code, out = run_cli(capsys, "sensitivity", "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "key,value"
        assert any(line.startswith("eta_t_k_per_sqrt_hz,") for line in lines)


class TestUsageAndErrors:
    def test_unknown_subcommand_exits_2(self, capsys):
        assert main(["bogus"]) == 2

    def test_no_subcommand_exits_2(self, capsys):
        assert main([]) == 2

    def test_missing_file_is_machine_readable(self, capsys):
        code, payload = run_json(capsys, "esr-fit", "no_such_file.csv")
        assert code == 1
        assert payload["error"]["type"] == "ParseError"
        assert "no_such_file.csv" in payload["error"]["message"]

    def test_stage_error_names_stage(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("psd_path = psd.csv\n")
        code, payload = run_json(capsys, "particle", str(cfg))
        assert code == 1
        assert payload["error"]["type"] == "StageError"
        assert payload["error"]["stage"] == "validate-config"


class TestTableFits:
    def test_heating_fit(self, capsys, tmp_path):
        poly = ZfsPolynomial()
        beta, d0 = 2.5e-5, 3e6
        intensity = np.array([0.5e10, 1e10, 2e10, 0.5e10, 1e10, 2e10])
        pressure = np.array([2000.0, 2000.0, 2000.0, 5000.0, 5000.0, 5000.0])
        d = poly.value(294.0 + beta * intensity / pressure) + d0
        table = tmp_path / "heating.csv"
        write_heating_csv(str(table), intensity, pressure, d, np.full(d.shape, 1.5e5))
        code, payload = run_json(capsys, "heating-fit", str(table))
        assert code == 0
        assert payload["beta_heat"] == pytest.approx(beta, rel=1e-6)
        assert payload["d_strain_hz"] == pytest.approx(d0, abs=1.0)
        assert len(payload["fitted_temperatures_k"]) == 6

    def test_calibrate(self, capsys, tmp_path):
        alpha, offset = 0.97, 3e6
        poly = ZfsPolynomial()
        t_set = np.linspace(294.0, 420.0, 7)
        d = offset + poly.value(alpha * t_set)
        table = tmp_path / "cal.csv"
        write_calibration_csv(str(table), t_set, d)
        code, payload = run_json(capsys, "calibrate", str(table))
        assert code == 0
        assert payload["alpha"] == pytest.approx(alpha, rel=1e-6)
        assert payload["d_strain_hz"] == pytest.approx(offset, rel=1e-3)


class TestSynthChain:
    def synth(self, capsys, tmp_path, config_text):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text(config_text)
        out = tmp_path / "inputs"
        code, payload = run_json(capsys, "synth", str(cfg), "--out-dir", str(out))
        assert code == 0
        assert "particle_config.txt" in payload["files"]
        return out

    def test_noiseless_round_trip(self, capsys, tmp_path):
        out = self.synth(capsys, tmp_path, "noiseless = true\n")
        code, payload = run_json(
            capsys,
            "particle",
            str(out / "particle_config.txt"),
            "--out-dir",
            str(tmp_path / "report"),
        )
        assert code == 0
        assert payload["sigma_abs_m2"] == pytest.approx(4e-18, rel=1e-6)
        assert payload["r_hydro_m"] == pytest.approx(100e-9, rel=1e-6)
        assert (tmp_path / "report" / "particle_report.json").exists()
        assert (tmp_path / "report" / "esr_fits.png").exists()

    def test_noisy_round_trip_within_ten_percent(self, capsys, tmp_path):
        out = self.synth(capsys, tmp_path, "seed = 12\n")
        code, payload = run_json(
            capsys,
            "particle",
            str(out / "particle_config.txt"),
            "--out-dir",
            str(tmp_path / "report"),
        )
        assert code == 0
        assert payload["sigma_abs_m2"] == pytest.approx(4e-18, rel=0.10)

    def test_esr_fit_on_synthetic_scan(self, capsys, tmp_path):
        out = self.synth(capsys, tmp_path, "noiseless = true\n")
        code, payload = run_json(capsys, "esr-fit", str(out / "esr_00.csv"))
        assert code == 0
        assert payload["e_split_hz"] == pytest.approx(5e6, rel=1e-3)
        assert not payload["single_dip"]

    def test_psd_fit_with_pressure_inverts_radius(self, capsys, tmp_path):
        out = self.synth(capsys, tmp_path, "noiseless = true\n")
        code, payload = run_json(
            capsys, "psd-fit", str(out / "psd.csv"), "--pressure-hpa", "15"
        )
        assert code == 0
        assert payload["r_hydro_m"] == pytest.approx(100e-9, rel=1e-6)
        assert payload["pressure_pa"] == pytest.approx(1500.0)


class TestEnsembleCommand:
    def test_seeded_runs_byte_identical(self, capsys, tmp_path):
        cfg = tmp_path / "ens.txt"
        cfg.write_text("particle_count = 6\n")
        for name in ("a", "b"):
            code, _ = run_json(
                capsys, "ensemble", str(cfg), "--seed", "7", "--out-dir", str(tmp_path / name)
            )
            assert code == 0
        assert dir_digests(tmp_path / "a") == dir_digests(tmp_path / "b")

    def test_serial_matches_parallel_bytes(self, capsys, tmp_path):
        cfg = tmp_path / "ens.txt"
        cfg.write_text("particle_count = 6\n")
        code, _ = run_json(
            capsys, "ensemble", str(cfg), "--seed", "7", "--out-dir", str(tmp_path / "serial")
        )
        assert code == 0
        code, _ = run_json(
            capsys,
            "ensemble",
            str(cfg),
            "--seed",
            "7",
            "--workers",
            "3",
            "--out-dir",
            str(tmp_path / "parallel"),
        )
        assert code == 0
        assert dir_digests(tmp_path / "serial") == dir_digests(tmp_path / "parallel")

    def test_summary_payload(self, capsys, tmp_path):
        cfg = tmp_path / "ens.txt"
        cfg.write_text("particle_count = 6\n")
        code, payload = run_json(
            capsys, "ensemble", str(cfg), "--seed", "1", "--out-dir", str(tmp_path / "out")
        )
        assert code == 0
        assert payload["n_records"] == 6
        assert set(payload["files"]) == {
            "beta_histogram.csv",
            "beta_histogram.png",
            "cross_section_fit.png",
            "ensemble_records.csv",
            "ensemble_report.json",
            "power_law_band.csv",
        }
        report = json.loads((tmp_path / "out" / "ensemble_report.json").read_text())
        assert report["n_records"] == 6
        assert "workers" not in report["config"]
