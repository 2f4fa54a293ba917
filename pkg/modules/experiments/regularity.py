import logging

import pandas as pd

from modules.common_visualizations import create_seminorm_chart
from modules.config_loader import build_grid
from modules.errors import FitError
from modules.grid import Field
from modules.local_operator import weierstrass_profile
from modules.reglab import Region, fit_exponent, interior_experiment

logger = logging.getLogger(__name__)

CALIBRATION_EXPONENTS = (0.3, 0.5, 0.7)


def calibrate(grid, seed=0):
    """Fitted exponents of Weierstrass-α fields on the half-radius box around the Ω centre."""
    region = Region(tuple(grid.omega_center), 0.5 * grid.omega_radius / grid.n, "calibration")
    rows = []
    for alpha in CALIBRATION_EXPONENTS:
        u = Field(grid, weierstrass_profile(grid, alpha, seed))
        report = fit_exponent(u, region, [alpha], seed)[0]
        rows.append({"alpha": alpha, "fitted_exponent": report.fitted_exponent, "stderr": report.stderr,
                     "fit_residual": report.fit_residual})
    return pd.DataFrame(rows)


def process(config):
    """
    Interior regularity: seminorm boundedness of a solve below the predicted
    order, growth above it for rough sources, and the Weierstrass calibration.
    """
    experiment_name = "regularity"

    # ==========================================================
    # 1. Calibration
    # ==========================================================
    calibration = calibrate(build_grid(config), config["seed"])
    calibration["error"] = (calibration["fitted_exponent"] - calibration["alpha"]).abs()

    # ==========================================================
    # 2. Interior experiment at N and 2N
    # ==========================================================
    result = interior_experiment(config)
    seminorms = result.to_frame()

    refinement_change = None
    try:
        finer = interior_experiment(config.override(grid__points=2 * config["grid.points"] - 1))
        refinement_change = max(abs(a.fitted_exponent - b.fitted_exponent)
                                for a, b in zip(result.reports, finer.reports))
    except FitError as e:
        logger.warning("Refinement comparison skipped: %s", e)

    summaries = pd.DataFrame([r.summary() for r in result.reports])
    summaries["tested"] = ["below" if r.order in result.below else "above" for r in result.reports]

    metrics = {
        "prediction": result.prediction,
        "orders_below": result.below,
        "orders_above": result.above,
        "reports": [r.summary() for r in result.reports],
        "calibration_max_error": float(calibration["error"].max()),
        "refinement_change": refinement_change,
        "solve_residual": result.solution.residual_sup,
    }
    if result.above:
        metrics["growth_above_prediction"] = not any(r.bounded for r in result.reports if r.order in result.above)
    checks = {"calibration": bool((calibration["error"] <= 0.1).all())}
    if "outside-theorem" not in result.prediction["flags"]:
        checks["bounded_below_prediction"] = result.bounded_below
    if refinement_change is not None:
        checks["refinement_consistent"] = refinement_change <= 0.05

    visualizations = {}
    try:
        visualizations["seminorms"] = create_seminorm_chart(seminorms, "스케일별 Hölder 세미노름")
    except Exception as e:
        logger.warning("Regularity visualization error: %s", e)

    return {
        "experiment_name": experiment_name,
        "frames": {"seminorms": seminorms[["scale", "order", "seminorm", "oscillation"]], "fits": summaries,
                   "calibration": calibration},
        "metrics": metrics,
        "checks": checks,
        "visualizations": visualizations,
        "primary": "seminorms",
    }
