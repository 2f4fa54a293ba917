import logging

import numpy as np
import pandas as pd

from modules.common_visualizations import create_symbol_chart
from modules.config_loader import build_grid, build_operator
from modules.errors import ValidationError
from modules.heat import mixed_symbol, symbol_bounds
from modules.measure import ellipticity, symbol, validate

logger = logging.getLogger(__name__)

A_CONSTANTS = (0.5, 1.0, 2.0)
RANDOM_FREQUENCIES = 256


def process(config):
    """
    Spectral measure checks, symbol homogeneity/evenness and the two-sided
    bounds of the mixed symbol for a ∈ {0.5, 1, 2}.
    """
    experiment_name = "symbol"

    # ==========================================================
    # 1. Measure
    # ==========================================================
    spec = build_operator(config)
    if spec is None:
        raise ValidationError("the symbol experiment needs a spectral measure (measure.kind != none)")
    violations = validate(spec.measure)
    report = ellipticity(spec.measure, spec.s)

    n = spec.n
    if n == 1:
        ellipticity_df = pd.DataFrame({"nu": [1.0, -1.0], "directional_integral": report.directional_integrals})
    else:
        count = report.sampled_directions
        ellipticity_df = pd.DataFrame({
            "angle": 2.0 * np.pi * np.arange(count) / count,
            "directional_integral": report.directional_integrals,
        })

    # ==========================================================
    # 2. Symbol on random frequencies
    # ==========================================================
    rng = np.random.default_rng(config["seed"])
    xi = 10.0 * rng.normal(size=(RANDOM_FREQUENCIES, n))
    t = rng.uniform(0.1, 10.0, size=RANDOM_FREQUENCIES)
    base = symbol(spec, xi)
    scaled = symbol(spec, xi * t[:, None])
    expected = t ** (2.0 * spec.s) * base
    homogeneity = float(np.max(np.abs(scaled - expected) / np.maximum(np.abs(expected), 1e-300)))
    evenness = float(np.max(np.abs(symbol(spec, -xi) - base)))
    at_zero = float(symbol(spec, np.zeros(n)))

    # ==========================================================
    # 3. Mixed symbol bounds
    # ==========================================================
    grid = build_grid(config)
    bounds = []
    for a_const in sorted(set(A_CONSTANTS) | {config["heat.a"]}):
        sampled = mixed_symbol(spec, a_const, grid)
        low, high = symbol_bounds(sampled)
        bounds.append({"a_const": a_const, "lambda": low, "Lambda": high})
        logger.info("Symbol bounds a=%g: lambda=%.6g, Lambda=%.6g", a_const, low, high)
    bounds_df = pd.DataFrame(bounds)

    shown = mixed_symbol(spec, config["heat.a"], grid)
    radius = np.sqrt(np.sum(shown.frequencies ** 2, axis=-1)).ravel()
    symbol_df = pd.DataFrame({
        "radius": radius,
        "symbol": shown.values.ravel(),
        "low_envelope": np.minimum(radius ** (2.0 * spec.s), radius ** 2),
        "high_envelope": np.maximum(radius ** (2.0 * spec.s), radius ** 2),
    })

    # ==========================================================
    # 4. Metrics / checks
    # ==========================================================
    metrics = {
        "measure": spec.measure.describe(),
        "violations": violations,
        **report.to_dict(),
        "homogeneity_error": homogeneity,
        "evenness_error": evenness,
        "symbol_at_zero": at_zero,
    }
    checks = {
        "measure_valid": not violations,
        "ellipticity_positive": report.lambda1_est > 0 and report.lambda1_power2s_est > 0,
        "homogeneous": homogeneity <= 1e-10,
        "even": evenness <= 1e-12 * max(1.0, float(np.max(np.abs(base)))),
        "vanishes_at_zero": at_zero == 0.0,
        "sandwich": bool(((bounds_df["lambda"] > 0) & np.isfinite(bounds_df["Lambda"])
                          & (bounds_df["lambda"] <= bounds_df["Lambda"])).all()),
    }

    visualizations = {}
    try:
        row = bounds_df[bounds_df["a_const"] == config["heat.a"]].iloc[0]
        visualizations["symbol"] = create_symbol_chart(symbol_df, row["lambda"], row["Lambda"],
                                                       f"A(ξ), s = {spec.s:g}, a = {config['heat.a']:g}")
    except Exception as e:
        logger.warning("Symbol visualization error: %s", e)

    # ==========================================================
    # [Return Area]
    # ==========================================================
    return {
        "experiment_name": experiment_name,
        "frames": {"ellipticity": ellipticity_df, "bounds": bounds_df, "symbol": symbol_df},
        "metrics": metrics,
        "checks": checks,
        "visualizations": visualizations,
        "primary": "symbol",
    }
