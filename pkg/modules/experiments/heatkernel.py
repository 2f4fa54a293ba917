import logging

import numpy as np
import pandas as pd

from modules.common_visualizations import create_field_chart
from modules.config_loader import build_grid, build_operator
from modules.heat import (
    gaussian_kernel,
    kernel,
    kernel_grid,
    lipschitz_seminorm,
    mixed_symbol,
    refinement_study,
    semigroup_defect,
    symbol_bounds,
)

logger = logging.getLogger(__name__)


def process(config):
    """
    Heat kernel H(t,·) of the constant-coefficient mixed symbol on a box
    `heat.box_factor` times the solve box.
    """
    experiment_name = "heatkernel"
    t, a_const = config["heat.t"], config["heat.a"]
    spec = build_operator(config)

    # ==========================================================
    # 1. Kernel slice
    # ==========================================================
    grid = kernel_grid(build_grid(config), config["heat.box_factor"])
    symbol = mixed_symbol(spec, a_const, grid)
    slice_t = kernel(symbol, t, config["heat.delta"])
    low, high = symbol_bounds(symbol)

    # ==========================================================
    # 2. Refinement, semigroup, closed form
    # ==========================================================
    refinement = refinement_study(spec, a_const, build_grid(config), t, slice_t.delta, config["heat.box_factor"])
    defect = semigroup_defect(symbol, t, t)

    metrics = {
        **slice_t.summary(),
        "a_const": a_const,
        "s": symbol.order if spec is not None else None,
        "kernel_points_per_axis": grid.points_per_axis,
        "lipschitz": lipschitz_seminorm(slice_t),
        "symbol_lambda": low,
        "symbol_Lambda": high,
        "semigroup_defect": defect,
        **refinement,
    }
    checks = {
        "unit_mass": abs(slice_t.mass - 1.0) <= 1e-6,
        "moment_finite": bool(np.isfinite(slice_t.moment)),
        "moment_refinement_stable": refinement["moment_stable"],
        "lipschitz_refinement_stable": refinement["lipschitz_stable"],
        "semigroup": defect <= 1e-6,
        "symbol_sandwich": low > 0 and np.isfinite(high) and low <= high,
    }
    if spec is None:
        closed = gaussian_kernel(grid, a_const, t)
        gaussian_error = float(np.max(np.abs(slice_t.values.values - closed)))
        metrics["gaussian_error"] = gaussian_error
        checks["gaussian_closed_form"] = gaussian_error <= 1e-6

    frames = {"kernel": slice_t.values.to_frame(), "refinement": pd.DataFrame([refinement])}

    visualizations = {}
    try:
        visualizations["kernel"] = create_field_chart(slice_t.values, f"열핵 H(t = {t:g}, ·)")
    except Exception as e:
        logger.warning("Heat kernel visualization error: %s", e)

    return {
        "experiment_name": experiment_name,
        "frames": frames,
        "metrics": metrics,
        "checks": checks,
        "visualizations": visualizations,
        "primary": "kernel",
    }
