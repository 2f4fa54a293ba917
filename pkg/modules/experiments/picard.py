import logging

import numpy as np
import pandas as pd

from modules.common_visualizations import create_contraction_chart, create_field_chart, create_vlambda_chart
from modules.config_loader import build_problem
from modules.solve import (
    LAMBDA_TARGET_RATIO,
    MixedSystem,
    resolvent_bound,
    solve_direct,
    solve_picard,
    solve_proximal,
    vlambda_sweep,
)

logger = logging.getLogger(__name__)


def process(config):
    """
    Contraction construction: λ selection, Picard limit against the direct
    shifted solve, the proximal variant against the unshifted solve, and
    the v_λ sup bounds.
    """
    experiment_name = "picard"
    tol = config["picard.tol"]

    # ==========================================================
    # 1. Picard iteration (λ = 0 → automatic)
    # ==========================================================
    problem = build_problem(config)
    system = MixedSystem(problem, config.max_points())
    picard = solve_picard(problem.with_shift(config["picard.lambda"]), tol, config["picard.max_iter"], system)
    lam = picard.lambda_shift
    ratios = picard.contraction_ratios

    direct = solve_direct(problem.with_shift(lam), config["solver.tol"], config["solver.max_iter"], system)
    picard_gap = float(np.max(np.abs(picard.u.values - direct.u.values)))
    logger.info("Picard vs direct shifted solve: %.3e (lambda=%g)", picard_gap, lam)

    # ==========================================================
    # 2. Proximal iteration → unshifted problem
    # ==========================================================
    proximal_lambda = config["picard.lambda"] or 1.0
    proximal = solve_proximal(problem, proximal_lambda, tol, config["picard.max_iter"], system, config["solver.tol"])
    unshifted = solve_direct(problem, config["solver.tol"], config["solver.max_iter"], system)
    proximal_gap = float(np.max(np.abs(proximal.u.values - unshifted.u.values)))

    # ==========================================================
    # 3. v_λ bounds and the resolvent estimate
    # ==========================================================
    vlambda_df, monotone = vlambda_sweep(problem.grid, problem.spec, config["vlambda.lambdas"],
                                         max_points=config.max_points())
    resolvent = resolvent_bound(problem, lam, system=system)

    # 상대 오차 기준: CG 허용오차를 더한 10·tol
    picard_target = 10.0 * tol + 10.0 * config["solver.tol"] * (problem.f.sup_norm() + 1.0)
    metrics = {
        **picard.summary(),
        "picard_vs_direct": picard_gap,
        "proximal_lambda": proximal_lambda,
        "proximal_iterations": proximal.iterations,
        "proximal_vs_unshifted": proximal_gap,
        "proximal_max_ratio": max(proximal.contraction_ratios) if proximal.contraction_ratios else None,
        "resolvent": resolvent,
        "vlambda_monotone": monotone,
    }
    checks = {
        "contraction": bool(ratios) and max(ratios) < LAMBDA_TARGET_RATIO,
        "geometric_convergence": all(r < 1.0 for r in ratios),
        "matches_direct_shifted": picard_gap <= picard_target,
        "proximal_matches_unshifted": proximal_gap <= 1e3 * tol * (unshifted.u.sup_norm() + 1.0),
        "vlambda_bound": bool(vlambda_df["passed"].all()),
        "resolvent_bound": resolvent["passed"],
    }

    frames = {
        "ratios": pd.DataFrame({"step": np.arange(1, len(ratios) + 1), "ratio": ratios}),
        "vlambda": vlambda_df,
        "solution": picard.u.to_frame(),
    }

    visualizations = {}
    try:
        visualizations["ratios"] = create_contraction_chart(ratios, f"Picard 축소 비율 (λ = {lam:g})")
        visualizations["vlambda"] = create_vlambda_chart(vlambda_df, "‖v_λ‖∞ vs 2/λ")
        visualizations["solution"] = create_field_chart(picard.u, "Picard 극한")
    except Exception as e:
        logger.warning("Picard visualization error: %s", e)

    return {
        "experiment_name": experiment_name,
        "frames": frames,
        "metrics": metrics,
        "checks": checks,
        "visualizations": visualizations,
        "primary": "solution",
    }
