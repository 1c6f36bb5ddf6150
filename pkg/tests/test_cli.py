from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from diracscat import __version__
from diracscat.cli import load_config, build_parser, main

GAUSS = {"kind": "gaussian", "amplitude": 0.5, "width": 1.0}


def write_config(tmp_path: Path, cfg: dict, name: str = "cfg.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ("CONFIG", "E", "M", "N_ORDER", "SEED", "JOBS", "OUT", "VERBOSE"):
        monkeypatch.delenv("DIRACSCAT_" + key, raising=False)


def test_forward_writes_outputs_and_manifest(tmp_path):
    cfg = write_config(tmp_path, {"potential": GAUSS, "N": 0, "grid": {"angles": [0.1], "n_azimuth": 2}})
    out = tmp_path / "out"
    assert main(["forward", "--config", cfg, "--out", str(out), "--jobs", "1"]) == 0
    for name in ("kernel_N0.csv", "kernel_N0.json", "leading.csv", "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "forward"
    assert manifest["version"] == __version__
    assert len(manifest["config_hash"]) == 64
    assert {"python", "numpy", "scipy"} <= set(manifest["versions"])
    assert manifest["timings"]["total_seconds"] >= 0


def test_config_hash_tracks_content(tmp_path):
    parser = build_parser()
    a = write_config(tmp_path, {"potential": GAUSS}, "a.json")
    b = write_config(tmp_path, {"potential": {**GAUSS, "amplitude": 0.6}}, "b.json")
    ha = load_config(parser.parse_args(["gauge", "--config", a])).hash()
    assert ha == load_config(parser.parse_args(["gauge", "--config", a])).hash()
    assert ha != load_config(parser.parse_args(["gauge", "--config", b])).hash()


def test_spectral_gap_is_config_error(tmp_path):
    cfg = write_config(tmp_path, {"potential": GAUSS, "kinematics": {"E": 0.5, "m": 1.0}})
    out = tmp_path / "out"
    assert main(["gauge", "--config", cfg, "--out", str(out)]) == 2
    err = json.loads((out / "error.json").read_text())
    assert err["exit_code"] == 2 and "spectral gap" in err["message"]


def test_missing_config_is_config_error(tmp_path):
    assert main(["gauge", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_malformed_config_is_config_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["gauge", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_negative_jobs_and_order_rejected(tmp_path):
    cfg = write_config(tmp_path, {"potential": GAUSS})
    assert main(["gauge", "--config", cfg, "--out", str(tmp_path), "--jobs", "0"]) == 2
    cfg = write_config(tmp_path, {"potential": GAUSS, "N": -1}, "n.json")
    assert main(["gauge", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_recon_he_requires_direction_count(tmp_path):
    cfg = write_config(tmp_path, {"potential": GAUSS})
    assert main(["recon-he", "--config", cfg, "--out", str(tmp_path)]) == 2
    err = json.loads((tmp_path / "error.json").read_text())
    assert "insufficient angular coverage" in err["message"]


def test_numeric_failure_exit_code(tmp_path):
    spiky = {"kind": "gaussian", "amplitude": 20.0, "width": 0.6, "center": [0.2, 0.1, 0.0]}
    grid = {"n_directions": 60, "plane_n": 16, "plane_half_width": 8.0, "space_n": 16}
    cfg = write_config(tmp_path, {"potential": spiky, "grid": grid})
    assert main(["recon-he", "--config", cfg, "--out", str(tmp_path)]) == 1
    err = json.loads((tmp_path / "error.json").read_text())
    assert err["error"] == "NumericError" and "phase wrap" in err["message"]


def test_environment_overrides(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, {"potential": GAUSS, "kinematics": {"E": 2.0}, "seed": 3})
    monkeypatch.setenv("DIRACSCAT_CONFIG", cfg)
    monkeypatch.setenv("DIRACSCAT_E", "-3.0")
    monkeypatch.setenv("DIRACSCAT_SEED", "11")
    monkeypatch.setenv("DIRACSCAT_OUT", str(tmp_path / "env_out"))
    monkeypatch.setenv("DIRACSCAT_N_ORDER", "2")
    rc = load_config(build_parser().parse_args(["gauge"]))
    assert rc.energies == (-3.0,) and rc.seed == 11 and rc.N == (2,)
    assert rc.output_dir == tmp_path / "env_out"
    # flags win over the environment
    rc = load_config(build_parser().parse_args(["gauge", "--seed", "5", "--out", str(tmp_path / "flag")]))
    assert rc.seed == 5 and rc.output_dir == tmp_path / "flag"


def test_symmetry_report_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, {"grid": {"n_points": 6, "kernels": False}, "N": 1})
    reports = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["symmetry", "--config", cfg, "--out", str(out), "--seed", "7"]) == 0
        reports.append((out / "report.json").read_bytes())
    assert reports[0] == reports[1]
    assert json.loads(reports[0])["all_pass"]


def test_gauge_and_xsection_commands(tmp_path):
    cfg = write_config(tmp_path, {"potential": GAUSS, "N": 1, "grid": {"n_points": 5}})
    assert main(["gauge", "--config", cfg, "--out", str(tmp_path / "g")]) == 0
    assert json.loads((tmp_path / "g" / "gauge.json").read_text())["passed"]
    cfg = write_config(tmp_path, {"potential": GAUSS, "N": 0}, "x.json")
    assert main(["xsection", "--config", cfg, "--out", str(tmp_path / "x")]) == 0
    xs = json.loads((tmp_path / "x" / "xsection.json").read_text())
    assert xs["sigma"] > 0 and xs["eikonal_sigma"] > 0


def test_recon_fe_command(tmp_path):
    tail = {"kind": "homogeneous-tail", "rho": 1.5, "angular": {"0,0": 0.2}}
    cfg = write_config(tmp_path, {"potential": tail, "grid": {"n_directions": 6, "n_phi": 8}})
    assert main(["recon-fe", "--config", cfg, "--out", str(tmp_path)]) == 0
    peel = json.loads((tmp_path / "peel.json").read_text())
    assert abs(peel["steps"][0]["rho"] - 1.5) < 1e-4


def test_catalog_model(tmp_path):
    cat = tmp_path / "catalog.json"
    cat.write_text(json.dumps({"models": {"bump": GAUSS}}))
    cfg = write_config(tmp_path, {"catalog": str(cat), "model": "bump", "N": 1, "grid": {"n_points": 3}})
    assert main(["gauge", "--config", cfg, "--out", str(tmp_path / "c")]) == 0
    cfg = write_config(tmp_path, {"catalog": str(cat), "model": "other"}, "bad.json")
    assert main(["gauge", "--config", cfg, "--out", str(tmp_path / "c")]) == 2


def test_version_and_unknown_command(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
    with pytest.raises(SystemExit) as exc:
        main(["teleport"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, {"potential": GAUSS, "kinematics": {"E": 0.2}})
    proc = subprocess.run([sys.executable, "-m", "diracscat.cli", "gauge", "--config", cfg, "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "error" in proc.stderr
