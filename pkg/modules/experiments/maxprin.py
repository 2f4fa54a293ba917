import logging

import numpy as np

from modules.common_visualizations import create_max_principle_chart
from modules.config_loader import build_problem
from modules.grid import Field
from modules.solve import MixedSystem, check_max_principle, m_matrix_report, random_bumps, solve_direct

logger = logging.getLogger(__name__)


def process(config):
    """
    Maximum principle over seeded random nonnegative sources, the comparison
    principle on one ordered pair of sources, and the M-matrix sign check.
    """
    experiment_name = "maxprin"

    problem = build_problem(config)
    system = MixedSystem(problem, config.max_points())

    # ==========================================================
    # 1. Random trials
    # ==========================================================
    report = check_max_principle(problem, config["maxprin.trials"], config["seed"], config["maxprin.signed"],
                                 system=system)

    # ==========================================================
    # 2. Comparison principle: f1 = f2 + (nonnegative bump)
    # ==========================================================
    rng = np.random.default_rng(config["seed"] + 1)
    lower = random_bumps(problem.grid, rng, count=3, signed=True)
    extra = random_bumps(problem.grid, rng, count=2, signed=False)
    upper = Field(problem.grid, lower.values + extra.values)
    u_lower = solve_direct(problem.with_source(lower), system=system).u
    u_upper = solve_direct(problem.with_source(upper), system=system).u
    gap = float(np.min((u_upper.values - u_lower.values)[problem.grid.omega_mask]))
    comparison_ok = gap >= -1e-8 * extra.sup_norm()

    structure = m_matrix_report(system)
    metrics = {**report.summary(), "comparison_min_gap": gap, "m_matrix": structure}
    checks = {
        "comparison_principle": comparison_ok,
        "m_matrix_signs": structure["offdiagonal_nonpositive"] and structure["row_sums_nonnegative"],
    }
    if report.applicable:
        checks["maximum_principle"] = report.passed
    else:
        logger.info("Signed control run: %d of %d trials kept min u >= 0", int(report.trials["passed"].sum()),
                    len(report.trials))

    visualizations = {}
    try:
        visualizations["trials"] = create_max_principle_chart(report.trials, "시행별 최소값 (min u)")
    except Exception as e:
        logger.warning("Max-principle visualization error: %s", e)

    return {
        "experiment_name": experiment_name,
        "frames": {"trials": report.trials},
        "metrics": metrics,
        "checks": checks,
        "visualizations": visualizations,
        "primary": "trials",
    }
