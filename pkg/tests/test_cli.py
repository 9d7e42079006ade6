"""End-to-end CLI runs: artifacts, determinism, exit codes, cleanup."""

import json
import os

import pytest

from remag.cli import main

SPECTRUM_INI = """\
[sequence]
kind = rotary_echo
theta_pi = 1.0
omega_mhz = 17.0
n_cycles = 85

[field]
detuning_mhz = 0.17
hyperfine_mhz = 2.14

[spectrum]
max_peaks = 6
filter_harmonics = true
"""

NOISE_INI = """\
[sequence]
kind = rotary_echo
theta_pi = 1.0
omega_mhz = 17.0
n_cycles = 10

[noise]
enabled = true
axis = z
kind = ou
sigma_mhz = 1.0
tau_c_us = 0.2
"""


def run(tmp_path, *argv):
    out = tmp_path / "out"
    rc = main(list(argv) + ["--out", str(out)])
    return rc, out


class TestSimulate:

    def test_default_run_writes_trace_and_manifest(self, tmp_path):
        rc, out = run(tmp_path, "simulate")
        assert rc == 0
        assert (out / "trace.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["tool"] == "remag"
        assert manifest["subcommand"] == "simulate"
        assert manifest["outputs"] == ["trace.csv"]
        assert manifest["seed"] == 12345
        assert len(manifest["config_hash"]) == 64

    def test_csv_metadata_block_has_no_timestamps(self, tmp_path):
        rc, out = run(tmp_path, "simulate", "--seed", "7")
        assert rc == 0
        text = (out / "trace.csv").read_text()
        meta = [ln for ln in text.splitlines() if ln.startswith("#")]
        assert any("config_hash" in ln for ln in meta)
        assert any("seed: 7" in ln for ln in meta)
        assert any("units" in ln for ln in meta)
        assert not any(":" in ln and "20" in ln and "T" in ln.split(":", 1)[1]
                       for ln in meta if "started" in ln or "finished" in ln)
        # timestamps live in the manifest only
        manifest = json.loads((out / "manifest.json").read_text())
        assert "started" in manifest and "finished" in manifest

    def test_seed_flag_overrides_config(self, tmp_path):
        rc, out = run(tmp_path, "simulate", "--seed", "99")
        assert json.loads((out / "manifest.json").read_text())["seed"] == 99


class TestDeterminism:

    def _trace_bytes(self, tmp_path, tag, seed):
        cfg = tmp_path / "noise.ini"
        cfg.write_text(NOISE_INI)
        out = tmp_path / tag
        rc = main(["simulate", "--config", str(cfg), "--trials", "50",
                   "--seed", str(seed), "--out", str(out)])
        assert rc == 0
        return (out / "trace.csv").read_bytes()

    def test_same_seed_byte_identical(self, tmp_path):
        a = self._trace_bytes(tmp_path, "a", 42)
        b = self._trace_bytes(tmp_path, "b", 42)
        assert a == b

    def test_different_seed_differs(self, tmp_path):
        a = self._trace_bytes(tmp_path, "a", 42)
        b = self._trace_bytes(tmp_path, "b", 43)
        assert a != b


class TestExitCodes:

    def test_unknown_key_exits_1(self, tmp_path, capsys):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[sequence]\nbogus_key = 1\n")
        rc, out = run(tmp_path, "simulate", "--config", str(cfg))
        assert rc == 1
        err = capsys.readouterr().err
        assert "bad.ini:2" in err and "bogus_key" in err
        assert not out.exists() or not list(out.iterdir())

    def test_missing_config_file_exits_1(self, tmp_path, capsys):
        rc, _ = run(tmp_path, "simulate", "--config",
                    str(tmp_path / "nope.ini"))
        assert rc == 1

    def test_noise_subcommand_needs_noise_enabled(self, tmp_path, capsys):
        rc, _ = run(tmp_path, "noise")
        assert rc == 1
        assert "noise.enabled" in capsys.readouterr().err

    def test_bad_trials_flag_exits_1(self, tmp_path, capsys):
        rc, _ = run(tmp_path, "simulate", "--trials", "0")
        assert rc == 1

    def test_runtime_failure_removes_partial_outputs(self, tmp_path,
                                                     monkeypatch, capsys):
        import remag.cli as cli

        def boom(*a, **k):
            raise RuntimeError("injected")

        monkeypatch.setattr(cli, "extract_detunings", boom)
        cfg = tmp_path / "spec.ini"
        cfg.write_text(SPECTRUM_INI)
        rc, out = run(tmp_path, "spectrum", "--config", str(cfg))
        assert rc == 2
        assert "injected" in capsys.readouterr().err
        # spectrum.csv and peaks.json were written before the failure
        assert not list(out.glob("*.csv")) and not list(out.glob("*.json"))


class TestSpectrum:

    def test_triplet_recovery(self, tmp_path):
        cfg = tmp_path / "spec.ini"
        cfg.write_text(SPECTRUM_INI)
        rc, out = run(tmp_path, "spectrum", "--config", str(cfg))
        assert rc == 0
        assert (out / "spectrum.csv").exists()
        peaks = json.loads((out / "peaks.json").read_text())
        assert len(peaks) == 6
        est = json.loads((out / "detunings.json").read_text())
        assert est["carrier_mhz"] == pytest.approx(17.0, abs=0.1)
        detunings = sorted(d for d, _ in est["detunings_mhz"])
        assert detunings[0] == pytest.approx(0.17, abs=0.02)
        assert detunings[1] == pytest.approx(2.14 - 0.17, abs=0.03)
        assert detunings[2] == pytest.approx(2.14 + 0.17, abs=0.03)


class TestNoiseRun:

    def test_decay_csv_has_model_column(self, tmp_path):
        cfg = tmp_path / "noise.ini"
        cfg.write_text(NOISE_INI)
        out = tmp_path / "out"
        rc = main(["noise", "--config", str(cfg), "--trials", "20",
                   "--out", str(out)])
        assert rc == 0
        header = [ln for ln in (out / "decay.csv").read_text().splitlines()
                  if not ln.startswith("#")][0]
        assert header.split(",") == ["t_us", "mc_mean", "mc_stderr", "model"]

    def test_validity_warning_propagates(self, tmp_path):
        # 3pi/4 echo under a slow strong bath sits outside the OU-z window
        cfg = tmp_path / "warn.ini"
        cfg.write_text(NOISE_INI.replace("theta_pi = 1.0", "theta_pi = 0.75"))
        out = tmp_path / "out"
        rc = main(["noise", "--config", str(cfg), "--trials", "5",
                   "--out", str(out)])
        assert rc == 0
        assert "# validity_warning" in (out / "decay.csv").read_text()
        assert json.loads((out / "manifest.json").read_text())[
            "validity_warning"] is True


class TestCalcium:

    def test_default_scenario_field(self, tmp_path):
        rc, out = run(tmp_path, "calcium")
        assert rc == 0
        lines = [ln for ln in (out / "calcium.csv").read_text().splitlines()
                 if not ln.startswith("#")]
        row = dict(zip(lines[0].split(","), map(float, lines[1].split(","))))
        assert row["field_ut"] == pytest.approx(0.6409, abs=0.001)
        # eta = B sqrt(2 pi N t) with N = 1 repetition, t = 10 us
        assert row["eta_required_ut_rthz"] == pytest.approx(
            row["field_ut"] * (2 * 3.141592653589793 * 10e-6) ** 0.5,
            rel=1e-9)


class TestSensitivity:

    def test_sweep_columns(self, tmp_path):
        rc, out = run(tmp_path, "sensitivity")
        assert rc == 0
        lines = [ln for ln in (out / "sensitivity.csv").read_text().splitlines()
                 if not ln.startswith("#")]
        assert lines[0].split(",") == ["t_us", "eta_ideal_ut",
                                       "eta_corrected_ut"]
        assert len(lines) > 10


class TestFigurePresets:

    def test_deterministic_fast_panel(self, tmp_path):
        # analytic panel: rerun must be byte-identical
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            rc = main(["figure", "3a", "--out", str(out), "--seed", "5"])
            assert rc == 0
            outs.append((out / "fig3a_signal.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_deterministic_mc_panel(self, tmp_path):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            rc = main(["figure", "4a", "--out", str(out), "--seed", "5",
                       "--trials", "40", "--threads", "2"])
            assert rc == 0
            outs.append((out / "fig4a_rabi_peaks.csv").read_bytes())
        assert outs[0] == outs[1]
