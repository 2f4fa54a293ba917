import logging

import numpy as np
import pandas as pd
from scipy import special

from modules.common_visualizations import create_contraction_chart, create_field_chart
from modules.config_loader import build_problem
from modules.grid import Field
from modules.measure import kernel_constant
from modules.solve import (
    MixedSystem,
    m_matrix_report,
    residual_target,
    solve_direct,
    solve_picard,
    solve_proximal,
)

logger = logging.getLogger(__name__)


def torsion_oracle(problem, amplitude):
    """
    Closed form of 𝓔u = amplitude on a 1D interval for the pure nonlocal
    operator with uniform measure of weight w:

        u(x) = amplitude·Γ(1/2)/(4^s Γ(1+s) Γ(1/2+s)) (R² - x²)^s / (2 C_s w)

    Returns None when the problem is not of that form.
    """
    spec, grid = problem.spec, problem.grid
    if spec is None or problem.a is not None or grid.n != 1 or grid.omega_kind != "ball":
        return None
    _, weights = spec.measure.nodes()
    if weights.size != 2 or abs(weights[0] - weights[1]) > 1e-12:
        return None
    s, radius = spec.s, grid.omega_radius
    constant = special.gamma(0.5) / (4.0 ** s * special.gamma(1.0 + s) * special.gamma(0.5 + s))
    offset = grid.axis - grid.omega_center[0]
    values = amplitude * constant * np.clip(radius ** 2 - offset ** 2, 0.0, None) ** s
    return Field(grid, values / (2.0 * kernel_constant(s) * weights[0]))


def process(config):
    """
    Solve 𝓔u = f with zero exterior data by the configured method.
    """
    experiment_name = "solve"

    # ==========================================================
    # 1. Problem & solve
    # ==========================================================
    problem = build_problem(config)
    system = MixedSystem(problem, config.max_points())
    method = config["solver.method"]

    if method == "direct":
        report = solve_direct(problem, config["solver.tol"], config["solver.max_iter"], system)
        step_tol = 0.0
    elif method == "picard":
        shifted = problem.with_shift(config["picard.lambda"])
        report = solve_picard(shifted, config["picard.tol"], config["picard.max_iter"], system)
        step_tol = config["picard.tol"]
    else:
        lam = config["picard.lambda"] or 1.0
        report = solve_proximal(problem, lam, config["picard.tol"], config["picard.max_iter"], system,
                                config["solver.tol"])
        step_tol = config["picard.tol"]
    target = residual_target(report, system, problem.f.sup_norm(), step_tol)

    # ==========================================================
    # 2. Diagnostics
    # ==========================================================
    structure = m_matrix_report(system, report.lambda_shift if method == "picard" else 0.0)
    metrics = {**report.summary(), "residual_target": target, "m_matrix": structure,
               "omega_points": system.size, "u_sup": report.u.sup_norm(), "u_min": float(report.u.values.min())}
    checks = {
        "residual_small": report.residual_sup <= target,
        "m_matrix_signs": structure["offdiagonal_nonpositive"] and structure["row_sums_nonnegative"],
    }

    oracle = torsion_oracle(problem, config["source.amplitude"]) if config["source.kind"] == "constant" else None
    if oracle is not None and method != "picard":
        inner = np.abs(problem.grid.axis - problem.grid.omega_center[0]) <= 0.5 * problem.grid.omega_radius
        error = float(np.max(np.abs(report.u.values - oracle.values)[inner]) / oracle.sup_norm())
        metrics["oracle_relative_error"] = error
        checks["matches_closed_form"] = error <= 0.05
        logger.info("Closed-form comparison: relative error %.3e on the inner half", error)

    frames = {"solution": report.u.to_frame()}
    if report.contraction_ratios:
        frames["ratios"] = pd.DataFrame({"step": np.arange(1, len(report.contraction_ratios) + 1),
                                         "ratio": report.contraction_ratios})

    visualizations = {}
    try:
        visualizations["solution"] = create_field_chart(report.u, f"해 u ({method})")
        if report.contraction_ratios:
            visualizations["ratios"] = create_contraction_chart(report.contraction_ratios, "축소 비율")
    except Exception as e:
        logger.warning("Solve visualization error: %s", e)

    return {
        "experiment_name": experiment_name,
        "frames": frames,
        "metrics": metrics,
        "checks": checks,
        "visualizations": visualizations,
        "primary": "solution",
    }
