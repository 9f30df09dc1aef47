import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pmheat.cli import ConfigError, RunConfig, build_data, format_json, main
from pmheat.spectral_field import RadialGrid

HARDY_05 = {"type": "hardy", "lambda": 0.5}


def _run(tmp_path, command, config, *extra):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return main([command, "--config", str(path), "--output", str(tmp_path / "out"), *extra])


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]


def test_threshold(tmp_path):
    assert _run(tmp_path, "threshold", {"n": 4, "k": 3, "potential": HARDY_05}) == 0
    rep = json.loads((tmp_path / "out" / "threshold_report.json").read_text())
    assert rep["tau"] == pytest.approx(0.5) and rep["passes"] is True
    assert rep["config"]["potential"] == HARDY_05


def test_threshold_failing_is_still_success(tmp_path):
    assert _run(tmp_path, "threshold", {"potential": {"type": "hardy", "lambda": 1.2}}) == 0
    rep = json.loads((tmp_path / "out" / "threshold_report.json").read_text())
    assert rep["passes"] is False


def test_solve_refusal(tmp_path, capsys):
    assert _run(tmp_path, "solve", {"potential": {"type": "hardy", "lambda": 1.2}}) == 3
    err = _error(capsys)
    assert err["code"] == "refusal"
    assert "||V||_{PM^{n-2}} < 1/C_{n-2,k}" in err["message"]


def test_solve_outputs_and_determinism(tmp_path):
    cfg = {"potential": HARDY_05, "time": {"count": 16}}
    assert _run(tmp_path, "solve", cfg) == 0
    out = tmp_path / "out"
    first = (out / "solve_report.json").read_bytes()
    rep = json.loads(first)
    assert rep["converged"] is True and rep["diffs"][-1] <= 1e-8
    assert rep["config"]["time"]["count"] == 16
    header, row = (out / "trajectory.csv").read_text().splitlines()[:2]
    assert header == "t,rho,h"
    assert len(row.split(",")) == 3
    assert _run(tmp_path, "solve", cfg) == 0
    assert (out / "solve_report.json").read_bytes() == first


def test_solve_non_convergence(tmp_path, capsys):
    assert _run(tmp_path, "solve", {"potential": HARDY_05, "max_iter": 3, "time": {"count": 16}}) == 4
    assert _error(capsys)["code"] == "non_convergence"


def test_solve_override_runs(tmp_path, capsys):
    cfg = {"potential": {"type": "hardy", "lambda": 1.2}, "override": True, "max_iter": 4, "time": {"count": 16}}
    assert _run(tmp_path, "solve", cfg) == 4


@pytest.mark.parametrize(
    "config",
    [
        {"potential": {"type": "quadrupole"}},
        {"potential": HARDY_05, "k": 5.0},
        {"potential": HARDY_05, "n": "four"},
        {"potential": HARDY_05, "initial_data": {"type": "spline"}},
        {"potential": HARDY_05, "initial_data": {"type": "gaussian", "scale": -1}},
        {"potential": HARDY_05, "grid": {"count": 1}},
        {},
    ],
)
def test_solve_validation_errors(tmp_path, capsys, config):
    assert _run(tmp_path, "solve", config) == 2
    assert _error(capsys)["code"] == "validation_error"


def test_missing_and_malformed_config(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "absent.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad)]) == 2
    assert main(["threshold"]) == 2
    assert main(["launch"]) == 2


def test_threads_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PMHEAT_THREADS", "zero")
    assert _run(tmp_path, "threshold", {"potential": HARDY_05}) == 2
    monkeypatch.setenv("PMHEAT_THREADS", "1")
    assert _run(tmp_path, "threshold", {"potential": HARDY_05}) == 0


def test_asymptotics(tmp_path):
    cfg = {
        "potential": HARDY_05,
        "initial_data": {"type": "power_law_plus_gaussian", "amplitude": 1 / (2 * math.pi), "bump_amplitude": 1.0},
        "reference_data": {"type": "power_law", "amplitude": 1 / (2 * math.pi)},
        "time": {"t_end": 100.0, "count": 48},
        "asymptotics": {"horizon": 1000.0, "samples": 31},
    }
    assert _run(tmp_path, "asymptotics", cfg) == 0
    out = tmp_path / "out"
    rep = json.loads((out / "asymptotics_report.json").read_text())
    assert rep["semigroup_gap"]["classification"] == "equivalent"
    assert rep["semigroup_gap"]["fitted_slope"] == pytest.approx(-1.5, rel=0.05)
    assert rep["convergence"]["decade_ratio"] <= 0.1
    assert (out / "series.csv").read_text().startswith("t,norm")
    assert (out / "convergence.csv").exists()


def test_asymptotics_without_potential(tmp_path):
    cfg = {"initial_data": {"type": "power_law", "amplitude": 0.2}, "reference_data": {"type": "zero"}}
    assert _run(tmp_path, "asymptotics", cfg) == 0
    rep = json.loads((tmp_path / "out" / "asymptotics_report.json").read_text())
    assert rep["semigroup_gap"]["classification"] == "not_equivalent"
    assert "convergence" not in rep


def test_crosscheck_small_box(tmp_path):
    cfg = {"crosscheck": {"L": 4.0, "N": 32, "dt": 0.01, "times": [0.05, 0.1]}}
    assert _run(tmp_path, "crosscheck", cfg) == 0
    rep = json.loads((tmp_path / "out" / "crosscheck.json").read_text())
    assert rep["box"]["N"] == 32 and len(rep["profile_errors"]) == 2
    assert rep["parity_mixing"] <= 1e-10


def test_crosscheck_refuses_zero_epsilon(tmp_path, capsys):
    assert _run(tmp_path, "crosscheck", {"crosscheck": {"N": 32, "epsilon": 0.0}}) == 3


def test_verify_without_crosscheck(tmp_path):
    assert _run(tmp_path, "verify", {"include_crosscheck": False}) == 0
    rep = json.loads((tmp_path / "out" / "verify_report.json").read_text())
    assert rep["passed"] is True
    assert {c["name"] for c in rep["checks"]} >= {"constants", "contraction_certificate", "self_similarity"}


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"potential": HARDY_05}))
    proc = subprocess.run(
        [sys.executable, "-m", "pmheat", "threshold", "--config", str(cfg), "--output", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert (tmp_path / "threshold_report.json").exists()


def test_format_json():
    text = format_json({"b": 0.1, "a": [1, np.float64(1 / 3), float("nan")], "c": None, "d": True, "e": np.bool_(False)})
    assert text.index('"a"') < text.index('"b"')
    assert "0.33333333333333331" in text
    assert "0.10000000000000001" in text
    blob = json.loads(text)
    assert blob["a"][2] is None and blob["d"] is True and blob["e"] is False


def test_run_config_defaults():
    cfg = RunConfig.from_dict("solve", {"potential": HARDY_05})
    assert cfg.n == 4 and cfg.k == 3.0 and cfg.tol == 1e-8
    assert cfg.time_grid().count == 64
    assert cfg.initial_data["amplitude"] == pytest.approx(1 / (2 * math.pi))
    with pytest.raises(ConfigError):
        RunConfig.from_dict("launch", {})


@pytest.mark.parametrize(
    "block",
    [
        {"type": "zero"},
        {"type": "gaussian", "scale": 0.5},
        {"type": "power_law", "k": 2.5, "amplitude": 2.0},
        {"type": "power_law_plus_gaussian", "bump_amplitude": 0.1},
    ],
)
def test_build_data(block):
    grid = RadialGrid(count=64)
    field = build_data(block, 4, 3.0, grid)
    assert field.profile.shape == (64,) and np.all(np.isfinite(field.profile))
