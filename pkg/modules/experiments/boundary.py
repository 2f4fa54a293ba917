import logging

import numpy as np
import pandas as pd

from modules.common_visualizations import create_boundary_chart
from modules.config_loader import build_problem
from modules.errors import ValidationError
from modules.reglab import boundary_fit
from modules.solve import MixedSystem, solve_direct

logger = logging.getLogger(__name__)

KAPPA_TOLERANCE = 0.05
SEPARATION_ERRORS = 3.0


def _fit_run(config, label):
    problem = build_problem(config)
    report = solve_direct(problem, config["solver.tol"], config["solver.max_iter"],
                          MixedSystem(problem, config.max_points()))
    kappa, stderr, count = boundary_fit(report.u, problem.grid)
    logger.info("Boundary fit %s: kappa %.4f ± %.4f (%d points)", label, kappa, stderr, count)

    grid = problem.grid
    band = grid.omega_mask & (grid.boundary_distance >= 4.0 * grid.h) & (
        grid.boundary_distance <= 0.1 * grid.omega_diameter)
    profile = pd.DataFrame({"run": label, "distance": grid.boundary_distance[band], "value": report.u.values[band]})
    return {"run": label, "s": config["operator.s"], "kappa": kappa, "stderr": stderr, "count": count}, profile


def process(config):
    """
    Boundary exponent of the mixed problem (expected 1) against pure nonlocal
    control runs (expected s) for every s in regularity.s_values.
    """
    experiment_name = "boundary"
    if config["measure.kind"] == "none":
        raise ValidationError("the boundary experiment needs a spectral measure for its control runs")
    if config["coef.kind"] == "none":
        raise ValidationError("the boundary experiment needs a local term (coef.kind != none)")

    # ==========================================================
    # 1. Mixed run
    # ==========================================================
    mixed, mixed_profile = _fit_run(config, "mixed")

    # ==========================================================
    # 2. Pure nonlocal controls
    # ==========================================================
    rows, profiles = [mixed], [mixed_profile]
    for s in config["regularity.s_values"]:
        row, profile = _fit_run(config.override(coef__kind="none", operator__s=s), f"nonlocal s={s:g}")
        rows.append(row)
        profiles.append(profile)
    fits = pd.DataFrame(rows)

    controls = fits.iloc[1:]
    separation = (mixed["kappa"] - controls["kappa"]).abs() / np.maximum(
        np.sqrt(mixed["stderr"] ** 2 + controls["stderr"] ** 2), 1e-300)

    metrics = {
        "mixed_kappa": mixed["kappa"],
        "mixed_stderr": mixed["stderr"],
        "controls": controls[["s", "kappa", "stderr", "count"]].to_dict(orient="records"),
        "min_separation": float(separation.min()) if len(separation) else None,
    }
    checks = {
        "mixed_kappa_one": abs(mixed["kappa"] - 1.0) <= KAPPA_TOLERANCE,
        "controls_kappa_s": bool(((controls["kappa"] - controls["s"]).abs() <= KAPPA_TOLERANCE).all()),
        "separated": bool((separation[controls["s"] <= 0.7] >= SEPARATION_ERRORS).all()),
    }

    profiles_df = pd.concat(profiles, ignore_index=True)
    visualizations = {}
    try:
        visualizations["profiles"] = create_boundary_chart(profiles_df, "경계 근처 u 와 d(x)")
    except Exception as e:
        logger.warning("Boundary visualization error: %s", e)

    return {
        "experiment_name": experiment_name,
        "frames": {"fits": fits, "profiles": profiles_df},
        "metrics": metrics,
        "checks": checks,
        "visualizations": visualizations,
        "primary": "fits",
    }
