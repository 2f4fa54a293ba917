import logging

import pandas as pd

from modules.common_visualizations import create_field_chart, create_vlambda_chart
from modules.config_loader import build_grid, build_operator
from modules.solve import build_barrier, check_concavity, vlambda_sweep

logger = logging.getLogger(__name__)


def process(config):
    """
    β-doubling barrier search, concavity on |r| <= R/4, and v_λ <= φ(w).
    """
    experiment_name = "barrier"
    grid = build_grid(config)
    spec = build_operator(config)

    # ==========================================================
    # 1. Barrier
    # ==========================================================
    barrier = build_barrier(grid, spec, config["barrier.beta"], max_points=config.max_points())
    concavity = check_concavity(barrier, spec, grid)

    # ==========================================================
    # 2. Comparison function
    # ==========================================================
    vlambda_df, monotone = vlambda_sweep(grid, spec, config["vlambda.lambdas"], barrier, config.max_points())

    metrics = {
        "center": [float(c) for c in barrier.center],
        "R": barrier.R,
        "beta": barrier.beta,
        "max_residual": barrier.max_residual,
        "concavity_worst": concavity,
        "vlambda_monotone": monotone,
    }
    checks = {
        "barrier_inequality": barrier.max_residual <= 1.0,
        "concave_near_omega": concavity <= 1e-12,
        "vlambda_bound": bool(vlambda_df["passed"].all()),
        "vlambda_below_phi": bool(vlambda_df["dominated"].all()),
        "vlambda_monotone": monotone,
    }

    frames = {
        "barrier": barrier.w.to_frame(),
        "vlambda": vlambda_df,
        "search": pd.DataFrame([{"beta": barrier.beta, "R": barrier.R, "max_residual": barrier.max_residual}]),
    }

    visualizations = {}
    try:
        visualizations["barrier"] = create_field_chart(barrier.w, f"장벽 함수 w (β = {barrier.beta:g})")
        visualizations["vlambda"] = create_vlambda_chart(vlambda_df, "‖v_λ‖∞ vs 2/λ")
    except Exception as e:
        logger.warning("Barrier visualization error: %s", e)

    return {
        "experiment_name": experiment_name,
        "frames": frames,
        "metrics": metrics,
        "checks": checks,
        "visualizations": visualizations,
        "primary": "barrier",
    }
