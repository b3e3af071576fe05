import json

import pandas as pd
import pytest

from fwmpairs import config as C
from fwmpairs.cli import main

FAST_MC = ["--set", "integration.fixed_s=0.002", "--set", "sweep.powers_mW=0.4, 1.0"]


def test_calibrate_writes_a_derived_config(default_cfg_path, tmp_path, capsys):
    out = tmp_path / "first"
    assert main(["calibrate", default_cfg_path, "-o", str(out)]) == C.EXIT_OK
    text = (out / "calibrated.cfg").read_text(encoding="utf-8")
    assert "source.kappa = " in text
    assert "dispersion.beta4_ps4_per_km = " in text
    assert (out / "calibration.csv").exists()
    stdout = capsys.readouterr().out
    assert "R_s at cross-check" in stdout


def test_calibrate_is_idempotent(default_cfg_path, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["calibrate", default_cfg_path, "-o", str(first)]) == C.EXIT_OK
    assert main(["calibrate", str(first / "calibrated.cfg"), "-o", str(second)]) == C.EXIT_OK
    assert (first / "calibrated.cfg").read_bytes() == (second / "calibrated.cfg").read_bytes()


@pytest.mark.parametrize("argv, code", [
    (["--set", "calibration.pair_ratio_signal=1.2"], C.EXIT_CALIBRATION),
    (["--set", "calibration.contrast=0.5"], C.EXIT_CALIBRATION),
    (["--set", "pump.colour=red"], C.EXIT_CONFIG),
    (["--set", "detection.eta_s=2"], C.EXIT_CONFIG),
])
def test_exit_codes(default_cfg_path, tmp_path, argv, code):
    assert main(["calibrate", default_cfg_path, "-o", str(tmp_path), *argv]) == code


def test_missing_config_file(tmp_path):
    assert main(["sweep-power", str(tmp_path / "nope.cfg"), "-o", str(tmp_path)]) == C.EXIT_CONFIG


def test_analytic_only_sweep_has_no_mc_columns(default_cfg_path, tmp_path, capsys):
    assert main(["sweep-power", default_cfg_path, "-o", str(tmp_path), "--analytic-only"]) == C.EXIT_OK
    table = pd.read_csv(tmp_path / "sweep-power.csv")
    assert list(table.columns) == ["power_mW", "seconds"] + C.SWEEP_ANALYTIC_COLUMNS
    assert len(table) == 6
    meta = json.loads((tmp_path / "sweep-power.json").read_text(encoding="utf-8"))
    assert meta["analytic_only"] is True
    assert meta["seed"] == C.DEFAULT_SEED
    assert "an_D_s_exponent" in meta["fits"]
    assert len(capsys.readouterr().out.strip().splitlines()) >= 6


def test_zwm_final_column_is_positive(default_cfg_path, tmp_path):
    assert main(["zwm-test", default_cfg_path, "-o", str(tmp_path), "--analytic-only"]) == C.EXIT_OK
    table = pd.read_csv(tmp_path / "zwm-test.csv")
    assert table.columns[-1] == "an_V_over_sigma"
    assert (table["an_V_over_sigma"] > 0).all()


def test_scan_writes_the_fit(default_cfg_path, tmp_path):
    assert main(["scan-spectrum", default_cfg_path, "-o", str(tmp_path), "--analytic-only"]) == C.EXIT_OK
    meta = json.loads((tmp_path / "scan-spectrum.json").read_text(encoding="utf-8"))
    assert 0.7 <= meta["fits"]["an_gaussian"]["fwhm"] <= 1.5
    table = pd.read_csv(tmp_path / "scan-spectrum.csv")
    assert list(table.columns) == [c for c in C.SCAN_COLUMNS if c != "pulses" and not c.startswith("mc_")]


@pytest.mark.slow
def test_monte_carlo_output_is_byte_identical(default_cfg_path, tmp_path):
    # 160000 pulses per point in four batches, so the workers really share the load
    split = ["--seed", "3", "--set", "run.batch_pulses=40000"]
    runs = {"a": [], "b": [], "c": ["--workers", "2"], "d": ["--workers", "4"]}
    for name, extra in runs.items():
        argv = ["sweep-power", default_cfg_path, "-o", str(tmp_path / name), *FAST_MC, *split, *extra]
        assert main(argv) == C.EXIT_OK
    csv = {name: (tmp_path / name / "sweep-power.csv").read_bytes() for name in runs}
    assert csv["a"] == csv["b"] == csv["c"] == csv["d"]
    assert list(pd.read_csv(tmp_path / "a" / "sweep-power.csv").columns) == C.SWEEP_COLUMNS
    meta = json.loads((tmp_path / "c" / "sweep-power.json").read_text(encoding="utf-8"))
    assert "run.workers=2" in meta["overrides"]


def test_output_dir_from_environment(default_cfg_path, tmp_path, monkeypatch):
    monkeypatch.setenv(C.OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert main(["sweep-power", default_cfg_path, "--analytic-only"]) == C.EXIT_OK
    assert (tmp_path / "env" / "sweep-power.csv").exists()


def test_selftest_command(capsys):
    assert main(["selftest"]) == C.EXIT_OK
    assert "PASS  solver_closed_form" in capsys.readouterr().out
