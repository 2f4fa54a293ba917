import hashlib
import json

import numpy as np
import pandas as pd

from modules.cli import SUBCOMMANDS, main
from modules.config_loader import config_from_dict
from modules.runner import (
    EXIT_CHECK_FAILED,
    EXIT_NUMERIC,
    EXIT_PASS,
    EXIT_USAGE,
    EXPERIMENT_MODULES,
    gnuplot_script,
    input_digest,
    load_experiment,
    run,
    to_jsonable,
)

SYMBOL_1D = """\
problem = symbol
dimension = 1
grid.points = 65
operator.s = 0.5
measure.kind = uniform
"""

SOLVE_1D = """\
problem = solve
dimension = 1
grid.points = 129
operator.s = 0.5
measure.kind = uniform
coef.kind = constant
source.kind = bump
"""


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_every_subcommand_is_registered():
    assert set(SUBCOMMANDS.values()) == set(EXPERIMENT_MODULES)
    for problem in EXPERIMENT_MODULES:
        assert callable(load_experiment(problem).process)


def test_symbol_run_writes_artifacts(write_config, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["symbol", "--config", str(write_config(SYMBOL_1D)), "--out", str(out)])
    assert code == EXIT_PASS
    assert "✅" in capsys.readouterr().out

    report = read_json(out / "report.json")
    assert report["exit_code"] == EXIT_PASS
    assert report["config"]["operator.s"] == 0.5
    assert report["error"] is None
    assert all(report["checks"].values())

    manifest = read_json(out / "manifest.json")
    assert {"ellipticity.csv", "bounds.csv", "symbol.csv", "results.json"} <= set(manifest)
    for name, digest in manifest.items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest

    bounds = pd.read_csv(out / "bounds.csv")
    assert (bounds["lambda"] > 0).all()


def test_runs_are_deterministic(write_config, tmp_path):
    path = str(write_config(SOLVE_1D))
    assert main(["solve", "--config", path, "--out", str(tmp_path / "a")]) == EXIT_PASS
    assert main(["solve", "--config", path, "--out", str(tmp_path / "b")]) == EXIT_PASS
    assert read_json(tmp_path / "a" / "manifest.json") == read_json(tmp_path / "b" / "manifest.json")


def test_overrides_reach_the_report(write_config, tmp_path):
    out = tmp_path / "run"
    code = main(["solve", "--config", str(write_config(SOLVE_1D)), "--out", str(out), "--method", "proximal",
                 "--seed", "4"])
    assert code == EXIT_PASS
    report = read_json(out / "report.json")
    assert report["config"]["solver.method"] == "proximal"
    assert report["config"]["seed"] == 4
    assert report["metrics"]["method"] == "proximal"


def test_primary_artifact_path(write_config, tmp_path):
    target = tmp_path / "u.csv"
    assert main(["solve", "--config", str(write_config(SOLVE_1D)), "--out", str(target), "--gnuplot"]) == EXIT_PASS
    frame = pd.read_csv(target)
    assert list(frame.columns) == ["x", "value"]
    assert (tmp_path / "solution.gp").exists()


def test_config_error_exit_code(write_config, tmp_path, capsys):
    path = write_config("problem = solve\noperator.s = 2\nmeasure.kind = uniform\n")
    assert main(["solve", "--config", str(path), "--out", str(tmp_path)]) == EXIT_USAGE
    assert "config error: line 2: operator.s: s must lie in (0,1)" in capsys.readouterr().out


def test_numeric_error_exit_code(write_config, tmp_path):
    path = write_config(SOLVE_1D + "stencil.max_points_1d = 64\n")
    out = tmp_path / "run"
    assert main(["solve", "--config", str(path), "--out", str(out)]) == EXIT_NUMERIC
    report = read_json(out / "report.json")
    assert report["error"]["type"] == "StencilTooLargeError"
    assert "grid too large for dense stencil" in report["error"]["message"]


def test_exhausted_picard_budget_is_numeric(tmp_path):
    config = config_from_dict({"problem": "solve", "measure.kind": "uniform", "grid.points": 65,
                               "solver.method": "picard", "picard.max_iter": 2, "picard.lambda": 1.0})
    record = run(config, tmp_path)
    assert record.exit_code == EXIT_NUMERIC
    assert record.error["type"] == "SolverError"


def test_check_failure_maps_to_exit_one(tmp_path, monkeypatch):
    config = config_from_dict({"problem": "symbol", "measure.kind": "uniform", "grid.points": 33})
    module = load_experiment("symbol")
    original = module.process

    def failing(cfg):
        result = original(cfg)
        result["checks"]["forced"] = False
        return result

    monkeypatch.setattr(module, "process", failing)
    record = run(config, tmp_path)
    assert record.exit_code == EXIT_CHECK_FAILED
    assert not record.passed


def test_heatkernel_gaussian_limit(tmp_path):
    config = config_from_dict({"problem": "heatkernel", "measure.kind": "none", "grid.points": 65})
    record = run(config, tmp_path)
    assert record.exit_code == EXIT_PASS, record.checks
    assert record.metrics["gaussian_error"] <= 1e-6


def test_maxprin_small(tmp_path):
    config = config_from_dict({"problem": "maxprin", "measure.kind": "uniform", "grid.points": 129,
                               "maxprin.trials": 4})
    record = run(config, tmp_path)
    assert record.exit_code == EXIT_PASS, record.checks
    assert "maximum_principle" in record.checks


def test_json_helpers():
    assert to_jsonable({"a": float("nan"), "b": [1.5, float("inf")]}) == {"a": None, "b": [1.5, None]}
    config = config_from_dict({"measure.kind": "uniform"})
    assert len(input_digest(config)) == 40
    assert input_digest(config) == input_digest(config_from_dict({"measure.kind": "uniform"}))
    script = gnuplot_script("kernel.csv", ["x", "value"])
    assert "plot 'kernel.csv' using 1:2" in script


def test_linear_algebra_failure_is_numeric(tmp_path, monkeypatch):
    config = config_from_dict({"problem": "symbol", "measure.kind": "uniform", "grid.points": 33})
    module = load_experiment("symbol")

    def singular(cfg):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setattr(module, "process", singular)
    record = run(config, tmp_path)
    assert record.exit_code == EXIT_NUMERIC
    assert record.error["type"] == "SolverError"
    assert "Singular matrix" in record.error["message"]
    assert read_json(tmp_path / "report.json")["exit_code"] == EXIT_NUMERIC


def test_liouville_checks_go_through_the_kernel(tmp_path):
    config = config_from_dict({"problem": "liouville", "measure.kind": "uniform", "grid.points": 129,
                               "heat.a": 1.0})
    record = run(config, tmp_path)
    assert record.exit_code == EXIT_PASS, record.checks
    assert {"kernel_unit_mass", "kernel_centred", "harmonic_averaged", "control_averaged"} <= set(record.checks)
    assert record.metrics["harmonic_defect"] <= record.metrics["harmonic_bound"] + 1e-8
    assert record.metrics["harmonic_ratio"] > 0
