import json
import subprocess
import sys

import numpy as np
import pytest

from heatdens.cli import main, read_grid_csv
from heatdens.errors import (ConfigError, DegeneracyError, HypothesisViolation, NonConvergenceError)

BB = {"process": {"name": "brownian_bridge"}, "diffusion": {"name": "uniform", "lo": 1.0, "hi": 2.0}}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _run(tmp_path, command, cfg, *extra):
    return main([command, "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "out"), *extra])


def _base(**kw):
    cfg = {"model": BB, "points": [{"x": 0.5, "t": 0.1}], "runs": [{"method": "bb_fast", "N": [2, 3]}]}
    cfg.update(kw)
    return cfg


def test_density_writes_csv_and_sidecar(tmp_path, capsys):
    assert _run(tmp_path, "density", _base()) == 0
    csv = tmp_path / "out" / "density_bb_fast_N3_x0.5_t0.1.csv"
    raw = csv.read_bytes()
    assert raw.startswith(b"u,density\n") and b"\r" not in raw
    u, f = read_grid_csv(csv)
    assert np.trapezoid(f, u) == pytest.approx(1.0, abs=2e-3)
    side = json.loads((tmp_path / "out" / "density_bb_fast_N3_x0.5_t0.1.json").read_text())
    assert side["meta"]["N"] == 3 and side["moments"]["mass"] == pytest.approx(1.0, abs=2e-3)
    assert json.loads(capsys.readouterr().out)["command"] == "density"


def test_outputs_are_byte_identical_across_runs(tmp_path):
    _run(tmp_path, "density", _base())
    first = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
    _run(tmp_path, "density", _base())
    second = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
    assert first == second


def test_converge_outputs(tmp_path):
    assert _run(tmp_path, "converge", _base()) == 0
    blocks = json.loads((tmp_path / "out" / "convergence.json").read_text())["blocks"]
    assert blocks[0]["pairs"][0][:2] == [2, 3]
    rows = (tmp_path / "out" / "convergence.csv").read_text().splitlines()
    assert rows[0] == "x,t,method,N,N_prime,l1" and len(rows) == 2


def test_check_outputs(tmp_path):
    assert _run(tmp_path, "check", _base()) == 0
    blk = json.loads((tmp_path / "out" / "hypotheses.json").read_text())["blocks"][0]
    assert all(v["holds"] for v in blk["verdicts"].values())


def test_validate_pass_and_fail(tmp_path):
    cfg = _base(runs=[{"method": "bb_fast", "N": [3]}], validate={"mc_samples": 20000, "ks_tol": 0.05})
    assert _run(tmp_path, "validate", cfg) == 0
    blk = json.loads((tmp_path / "out" / "validation.json").read_text())["blocks"][0]
    assert blk["branch"] == "ks" and blk["passed"] and "exact" in blk
    cfg["validate"]["ks_tol"] = 1e-6
    assert _run(tmp_path, "validate", cfg) == 1


def test_seed_changes_validation_samples(tmp_path):
    cfg = _base(runs=[{"method": "bb_fast", "N": [3]}], validate={"mc_samples": 20000, "ks_tol": 0.05})
    _run(tmp_path, "validate", cfg, "--seed", "4")
    a = json.loads((tmp_path / "out" / "validation.json").read_text())["blocks"][0]
    _run(tmp_path, "validate", cfg, "--seed", "5")
    b = json.loads((tmp_path / "out" / "validation.json").read_text())["blocks"][0]
    assert a["seed"] == 4 and b["seed"] == 5 and a["samples"] != b["samples"]


def test_config_violations_are_aggregated(tmp_path, capsys):
    cfg = _base(points=[{"x": 1.5, "t": 0.1}], runs=[{"method": "bb_fast", "N": [3, 2]}])
    cfg["model"] = {"process": {"name": "brownian_motion"}, "diffusion": {"name": "uniform", "lo": 2.0, "hi": 1.0}}
    assert _run(tmp_path, "density", cfg) == 2
    err = json.loads(capsys.readouterr().err)
    text = " ".join(err["violations"])
    assert err["error"] == "ConfigError" and len(err["violations"]) >= 4
    for fragment in ("points/0/x", "hi must be >= lo", "strictly increasing", "requires the brownian_bridge"):
        assert fragment in text


def test_unknown_key_rejected(tmp_path):
    assert _run(tmp_path, "density", _base(extra=1)) == 2


def test_negative_seed_rejected(tmp_path):
    assert _run(tmp_path, "density", _base(), "--seed", "-1") == 2


def test_missing_config_file(tmp_path):
    assert main(["density", "--config", str(tmp_path / "none.json")]) == 2


def test_converge_needs_two_orders(tmp_path):
    assert _run(tmp_path, "converge", _base(runs=[{"method": "bb_fast", "N": [3]}])) == 2


def test_singular_covariance_exit_code(tmp_path, capsys):
    model = {"process": {"name": "general_sine", "nu": [1.0], "xi_law": "normal"},
             "diffusion": {"name": "uniform", "lo": 1.0, "hi": 2.0}}
    assert _run(tmp_path, "density", _base(model=model, runs=[{"method": "fourier_joint", "N": [2]}])) == 4
    assert "singular covariance" in json.loads(capsys.readouterr().err)["message"]


def test_nonconvergence_exit_code(tmp_path):
    model = {"process": {"name": "general_sine", "nu": "inverse_cube_log", "xi_law": "uniform"},
             "diffusion": {"name": "uniform", "lo": 1.0, "hi": 2.0}}
    cfg = _base(model=model, points=[{"x": 0.5, "t": 0.3}], runs=[{"method": "fourier_indep", "N": [2]}],
                quad={"refine": True, "refine_tol": 1e-12, "max_doublings": 1, "legendre_order": 8})
    assert _run(tmp_path, "density", cfg) == 5


def test_error_exit_codes():
    assert ConfigError("x").exit_code == 2
    assert HypothesisViolation("x").exit_code == 3
    assert DegeneracyError("x").exit_code == 4
    assert NonConvergenceError("x").exit_code == 5


def test_console_script_entry_point(tmp_path):
    path = _write(tmp_path, _base())
    out = subprocess.run([sys.executable, "-m", "heatdens.cli", "check", "--config", path, "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["command"] == "check"
