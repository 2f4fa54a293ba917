import logging

import numpy as np
import pandas as pd

from modules.common_visualizations import create_field_chart, create_operator_comparison_chart
from modules.config_loader import build_grid, build_operator
from modules.errors import StencilTooLargeError, ValidationError
from modules.grid import Field
from modules.nonlocal_operator import apply_fft, apply_L_points, apply_stencil, assemble_stencil

logger = logging.getLogger(__name__)

# 주기 이미지의 기여를 1e-4 아래로 두는 패딩 배수
FFT_PADDING = {1: 256, 2: 8}
GAUSSIAN_WIDTH = 0.25
MAX_2D_SAMPLES = 2000


def gaussian(grid, width=GAUSSIAN_WIDTH):
    return Field.from_function(grid, lambda *x: np.exp(-sum(c ** 2 for c in x) / (2.0 * width ** 2)))


def inner_half_indices(grid, limit=MAX_2D_SAMPLES):
    """Grid indices with |x_i| <= b/2 (strided in 2D to at most `limit` points)."""
    inner = np.all([np.abs(c) <= grid.box_halfwidth / 2.0 for c in grid.coordinates], axis=0)
    indices = np.argwhere(inner)
    if len(indices) > limit:
        stride = int(np.ceil(len(indices) / limit))
        indices = indices[::stride]
    return indices


def process(config):
    """
    Cross-check the quadrature, stencil and FFT paths of L on a Gaussian,
    plus constant/affine annihilation and linearity.
    """
    experiment_name = "apply"

    spec = build_operator(config)
    if spec is None:
        raise ValidationError("the apply experiment needs a spectral measure (measure.kind != none)")
    grid = build_grid(config)
    u = gaussian(grid)
    samples = inner_half_indices(grid)

    # ==========================================================
    # 1. Quadrature vs FFT
    # ==========================================================
    padding = config["apply.padding"] or FFT_PADDING[grid.n]
    quadrature = apply_L_points(spec, u, samples)
    reference = apply_fft(spec, u, padding).values[tuple(samples.T)]
    scale = float(np.max(np.abs(reference)))
    oracle_error = float(np.max(np.abs(quadrature - reference))) / scale
    logger.info("Quadrature vs FFT (padding %d): relative sup error %.3e", padding, oracle_error)

    # ==========================================================
    # 2. Stencil vs quadrature
    # ==========================================================
    stencil_error = None
    stencil_df = None
    try:
        stencil = assemble_stencil(spec, grid, config.max_points())
        stencil_values = apply_stencil(stencil, u).values[tuple(samples.T)]
        stencil_error = float(np.max(np.abs(stencil_values - quadrature))) / scale
        stencil_df = stencil.to_frame()
    except StencilTooLargeError as e:
        logger.warning("Stencil comparison skipped: %s", e)

    # ==========================================================
    # 3. Annihilation / linearity
    # ==========================================================
    ones = Field(grid, np.ones(grid.shape), 1.0)
    constant_residual = float(np.max(np.abs(apply_L_points(spec, ones, samples))))

    centre = np.array([grid.points_per_axis // 2] * grid.n)
    slope = np.linspace(0.7, -0.4, grid.n)
    ramp_values = 0.3 + sum(g * c for g, c in zip(slope, grid.coordinates))
    ramp = Field(grid, ramp_values, float(ramp_values[tuple(centre)]))
    affine_residual = abs(float(apply_L_points(spec, ramp, centre[None, :])[0]))
    affine_scale = float(np.max(np.abs(ramp_values)))

    rng = np.random.default_rng(config["seed"])
    other = Field(grid, np.where(grid.omega_mask, rng.normal(size=grid.shape), 0.0))
    alpha, beta = 1.7, -0.6
    combined = apply_L_points(spec, Field(grid, alpha * u.values + beta * other.values), samples)
    separate = alpha * quadrature + beta * apply_L_points(spec, other, samples)
    linearity_error = float(np.max(np.abs(combined - separate))) / max(1.0, float(np.max(np.abs(separate))))

    metrics = {
        "operator": spec.describe(),
        "samples": int(len(samples)),
        "fft_padding": padding,
        "oracle_relative_error": oracle_error,
        "stencil_relative_error": stencil_error,
        "constant_residual": constant_residual,
        "affine_residual_center": affine_residual,
        "linearity_error": linearity_error,
    }
    checks = {
        "oracle_equivalence": oracle_error <= 1e-4,
        "constants_annihilated": constant_residual <= 1e-8,
        "affine_annihilated": affine_residual <= 1e-8 * affine_scale,
        "linear": linearity_error <= 1e-10,
    }
    if stencil_error is not None:
        checks["stencil_matches_quadrature"] = stencil_error <= 1e-10

    frame = pd.DataFrame({f"index_{'ij'[i]}": samples[:, i] for i in range(grid.n)})
    for i in range(grid.n):
        frame["xy"[i]] = grid.axis[samples[:, i]]
    frame["quadrature"] = quadrature
    frame["fft"] = reference
    frames = {"operator": frame}
    if stencil_df is not None:
        frames["stencil"] = stencil_df

    visualizations = {}
    try:
        visualizations["input"] = create_field_chart(u, "Gaussian 입력")
        if grid.n == 1:
            visualizations["comparison"] = create_operator_comparison_chart(frame, f"Lu: 구적 vs FFT (s = {spec.s:g})")
    except Exception as e:
        logger.warning("Apply visualization error: %s", e)

    return {
        "experiment_name": experiment_name,
        "frames": frames,
        "metrics": metrics,
        "checks": checks,
        "visualizations": visualizations,
        "primary": "operator",
    }
