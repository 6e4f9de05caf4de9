import json
import subprocess
import sys

import pytest

from patchlab.cli import (EXIT_CONFIG, EXIT_DIVERGE, EXIT_FAIL, EXIT_OK, ConfigError,
                          SimulateConfig, build_config, main)


def write_cfg(tmp_path, d, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def report(out, name):
    return json.loads((out / "reports" / f"{name}.json").read_text())


def strip_meta(d):
    d = dict(d)
    d.pop("metadata")
    return d


# --- configuration ------------------------------------------------------------------

def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        build_config("simulate", {"colour": 1}, {})


def test_flags_override_file():
    cfg = build_config("simulate", {"dt": 0.5, "T_final": 1.0}, {"dt": 0.01, "n": 64})
    assert cfg == SimulateConfig(dt=0.01, T_final=1.0, N=64)
    v = build_config("verify-identities", {}, {"n": 128})
    assert v.M == 128


def test_flag_not_applicable():
    with pytest.raises(ConfigError):
        build_config("moduli", {}, {"dt": 0.1})


@pytest.mark.parametrize("bad", [{"tol": -1}, {"M": 15}, {"M": "big"}])
def test_bad_values_rejected(bad):
    with pytest.raises((ConfigError, TypeError)):
        build_config("verify-identities", bad, {})


def test_malformed_config_exit_2_no_output(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    out = tmp_path / "out"
    assert main(["moduli", "--config", str(p), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()
    cfg = write_cfg(tmp_path, {"curve": {"name": "square"}})
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_unknown_subcommand():
    assert main(["frobnicate"]) == EXIT_CONFIG


# --- moduli -----------------------------------------------------------------------------

def test_moduli_default_passes(tmp_path):
    assert main(["moduli", "--out", str(tmp_path)]) == EXIT_OK
    rep = report(tmp_path, "moduli")
    assert rep["passed"] and set(rep["results"]) == {"A1", "A2", "A3", "interpolation", "scaling"}


def test_moduli_A1_failure(tmp_path):
    cfg = write_cfg(tmp_path, {"modulus": {"family": "log_power", "s": 1.5}})
    assert main(["moduli", "--config", cfg, "--out", str(tmp_path)]) == EXIT_FAIL
    assert not report(tmp_path, "moduli")["results"]["A1"]["passes"]


def test_moduli_hoelder(tmp_path):
    cfg = write_cfg(tmp_path, {"modulus": {"family": "hoelder", "alpha": 0.5}})
    assert main(["moduli", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    assert report(tmp_path, "moduli")["results"]["scaling"]["ratio"] <= 1 + 1e-9


def test_reports_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["moduli", "--out", str(a), "--seed", "3"])
    main(["moduli", "--out", str(b), "--seed", "3"])
    ra, rb = report(a, "moduli"), report(b, "moduli")
    assert "timestamp" in ra["metadata"]
    assert json.dumps(strip_meta(ra), sort_keys=True) == json.dumps(strip_meta(rb), sort_keys=True)


# --- simulate ---------------------------------------------------------------------------

def test_simulate_circle(tmp_path, capsys):
    code = main(["simulate", "--out", str(tmp_path), "--n", "64", "--dt", "0.01", "--tfinal", "0.1"])
    assert code == EXIT_OK
    line = capsys.readouterr().out
    assert "area_drift" in line
    rep = report(tmp_path, "simulate")
    assert rep["results"]["area_drift"] < 1e-8
    assert (tmp_path / "diag.csv").read_text().splitlines()[0] == \
        "t,area,perimeter,arc_chord,nC1phi_gamma,nC1phi_h,hcde_drift,vmax"


def test_simulate_ellipse_rate(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"curve": {"name": "ellipse", "a": 1.5, "b": 1.0}, "N": 128,
                               "dt": 5e-3, "T_final": 0.2})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    assert "rotation_rate=1.50" in capsys.readouterr().out


def test_simulate_zero_horizon(tmp_path):
    assert main(["simulate", "--out", str(tmp_path), "--n", "32", "--tfinal", "0"]) == EXIT_OK
    rows = (tmp_path / "diag.csv").read_text().splitlines()
    assert len(rows) == 2


def test_simulate_byte_for_byte(tmp_path):
    args = ["simulate", "--n", "32", "--dt", "0.01", "--tfinal", "0.03"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("diag.csv", "snap_000000.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# --- series probe and identities ----------------------------------------------------------

def test_series_probe_circle(tmp_path):
    cfg = write_cfg(tmp_path, {"N": 256})
    assert main(["series-probe", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    r = report(tmp_path, "series-probe")["results"]
    assert r["residual"] <= max(1e-3, r["tail_bound"])
    # geometric decay at a ratio comparable to sup|D|
    assert 0.5 * r["sup_D"] <= r["observed_ratio"] <= 1.5 * r["sup_D"]


def test_series_probe_divergence(tmp_path):
    cfg = write_cfg(tmp_path, {"curve": {"name": "perturbed_circle", "m": 40, "eps": 0.5}, "N": 256,
                               "target": 1e-6})
    assert main(["series-probe", "--config", cfg, "--out", str(tmp_path)]) == EXIT_DIVERGE
    assert "error" in report(tmp_path, "series-probe")["results"]


def test_verify_small_grid_loose_tier(tmp_path):
    assert main(["verify-identities", "--n", "64", "--out", str(tmp_path)]) == EXIT_FAIL
    ids = report(tmp_path, "verify-identities")["results"]
    assert set(ids) == {"cotlar", "product_formula", "lemma_T", "dv_of_PiQ"}
    assert all("refinement_slope" in v for v in ids.values())
    assert any(v["tier"] != "strict" for v in ids.values())


@pytest.mark.slow
def test_verify_default_passes(tmp_path):
    assert main(["verify-identities", "--out", str(tmp_path)]) == EXIT_OK
    ids = report(tmp_path, "verify-identities")["results"]
    assert all(v["residual"] < 1e-3 for v in ids.values())


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "patchlab.cli", "moduli", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert "A1" in r.stdout
