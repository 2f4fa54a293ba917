"""
Experiment registry, dispatch and persistence.

Every run writes into its own output directory:

    <name>.csv        one per result frame
    results.json      metrics + checks (deterministic, hashed)
    manifest.json     sha256 per output file
    report.json       resolved config, timings, checks, error (if any)
"""
import hashlib
import importlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from modules.errors import ConfigError, NumericError, SolverError, StableMixError, ValidationError

logger = logging.getLogger(__name__)

# Register available experiment modules here
# Key: problem name (config `problem`), Value: module name in modules/experiments
EXPERIMENT_MODULES = {
    "symbol": "symbol",
    "apply": "apply",
    "solve": "solve",
    "picard": "picard",
    "heatkernel": "heatkernel",
    "maxprin": "maxprin",
    "regularity": "regularity",
    "boundary": "boundary",
    "liouville": "liouville",
    "barrier": "barrier",
}

EXIT_PASS, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class RunRecord:
    problem: str
    config_digest: str
    input_digest: str
    timings: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    error: dict | None = None
    exit_code: int = EXIT_PASS
    figures: list = field(default_factory=list)

    @property
    def passed(self):
        return self.exit_code == EXIT_PASS


# =====================================================
# JSON helpers
# =====================================================
def to_jsonable(value):
    """numpy scalars/arrays -> Python, NaN/inf -> None, recursively."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _dump(payload, path):
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def input_digest(config):
    """git-style blob hash of the resolved config text."""
    body = json.dumps(config.resolved(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


# =====================================================
# gnuplot scripts
# =====================================================
def gnuplot_script(csv_name, columns):
    """Plot every numeric column against the first one."""
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set grid",
        f"set title '{csv_name}'",
    ]
    plots = [f"'{csv_name}' using 1:{i + 1} with linespoints" for i in range(1, len(columns))]
    lines.append("plot " + ", \\\n     ".join(plots) if plots else f"plot '{csv_name}' using 0:1")
    lines.append("pause -1")
    return "\n".join(lines) + "\n"


# =====================================================
# Run
# =====================================================
def load_experiment(problem):
    if problem not in EXPERIMENT_MODULES:
        raise ConfigError(f"unknown problem '{problem}' (registered: {', '.join(EXPERIMENT_MODULES)})")
    return importlib.import_module(f"modules.experiments.{EXPERIMENT_MODULES[problem]}")


def persist(result, out_dir, primary_path=None, gnuplot=False, figures=False):
    """
    Write frames, results.json and manifest.json.

    Returns:
        (outputs manifest {file: sha256}, figure file names)
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, frame in sorted(result["frames"].items()):
        path = out_dir / f"{name}.csv"
        frame.to_csv(path, index=False, float_format="%.17g")
        written.append(path)
        if gnuplot:
            script = out_dir / f"{name}.gp"
            script.write_text(gnuplot_script(path.name, list(frame.columns)), encoding="utf-8")
            written.append(script)

    primary = result.get("primary")
    if primary_path is not None and primary in result["frames"]:
        result["frames"][primary].to_csv(primary_path, index=False, float_format="%.17g")

    results_path = out_dir / "results.json"
    _dump({"experiment": result["experiment_name"], "metrics": result["metrics"], "checks": result["checks"]},
          results_path)
    written.append(results_path)

    outputs = {path.name: _sha256(path) for path in written}
    _dump(outputs, out_dir / "manifest.json")

    figure_files = []
    if figures:
        for name, fig in sorted(result.get("visualizations", {}).items()):
            path = out_dir / f"{name}.html"
            fig.write_html(str(path), include_plotlyjs="cdn")
            figure_files.append(path.name)
    return outputs, figure_files


def _process(module, config):
    try:
        return module.process(config)
    except np.linalg.LinAlgError as e:
        raise SolverError(f"linear algebra failure: {e}") from e
    except RuntimeError as e:
        # splu: "Factor is exactly singular"
        if "singular" not in str(e):
            raise
        raise SolverError(f"linear algebra failure: {e}") from e


def run(config, out=None, gnuplot=False, figures=False):
    """
    Dispatch config.problem to its experiment module and persist the results.

    `out` is a directory, or a `.csv` / `.json` file name whose parent becomes
    the output directory (the primary frame or the report is then also written
    to that exact path).

    Returns:
        RunRecord
    """
    out = Path(out if out is not None else config["output"])
    primary_path = report_path = None
    if out.suffix == ".csv":
        out_dir, primary_path = out.parent, out
    elif out.suffix == ".json":
        out_dir, report_path = out.parent, out
    else:
        out_dir = out
    out_dir.mkdir(parents=True, exist_ok=True)

    record = RunRecord(config.problem, config.digest(), input_digest(config))
    started = time.perf_counter()
    try:
        module = load_experiment(config.problem)
        with sfft.set_workers(config["threads"]):
            result = _process(module, config)
        record.timings["process"] = time.perf_counter() - started

        persisted = time.perf_counter()
        record.outputs, record.figures = persist(result, out_dir, primary_path, gnuplot, figures)
        record.timings["persist"] = time.perf_counter() - persisted

        record.checks = {name: bool(value) for name, value in result["checks"].items()}
        record.metrics = result["metrics"]
        record.exit_code = EXIT_PASS if all(record.checks.values()) else EXIT_CHECK_FAILED
        for name, passed in record.checks.items():
            logger.info("%s %s", "PASS" if passed else "FAIL", name)
    except (ConfigError, ValidationError) as e:
        record.error = {"type": type(e).__name__, "message": str(e)}
        record.exit_code = EXIT_USAGE
        logger.error("%s: %s", type(e).__name__, e)
    except NumericError as e:
        record.error = {"type": type(e).__name__, "message": str(e)}
        if getattr(e, "last_residual", None) is not None:
            record.error["last_residual"] = e.last_residual
        record.exit_code = EXIT_NUMERIC
        logger.error("%s: %s", type(e).__name__, e)
    except StableMixError as e:
        record.error = {"type": type(e).__name__, "message": str(e)}
        record.exit_code = EXIT_NUMERIC
        logger.error("%s: %s", type(e).__name__, e)
    record.timings["total"] = time.perf_counter() - started

    report = {
        "problem": record.problem,
        "config": config.resolved(),
        "config_path": config.path,
        "config_digest": record.config_digest,
        "input_digest": record.input_digest,
        "timings": record.timings,
        "checks": record.checks,
        "metrics": record.metrics,
        "outputs": record.outputs,
        "figures": record.figures,
        "error": record.error,
        "exit_code": record.exit_code,
    }
    _dump(report, out_dir / "report.json")
    if report_path is not None:
        _dump(report, report_path)
    return record
