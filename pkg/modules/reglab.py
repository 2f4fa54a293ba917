"""
Empirical regularity: Hölder seminorms on sampled pair sets, log-log
exponent fits and the boundary exponent of Dirichlet solutions.

An order β in (m, m+1] means C^{m, β-m}: derivatives of order m = ⌈β⌉-1 are
differenced first, so β = 1 is the Lipschitz seminorm.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats

from modules.config_loader import build_problem
from modules.errors import FitError, RegionError
from modules.solve import solve_direct

logger = logging.getLogger(__name__)

PAIR_SAMPLES_2D = 100_000
MIN_SCALES = 4
MIN_BOUNDARY_POINTS = 6
BOUNDARY_BINS = 12
BOUNDED_SLOPE = -0.1


# =====================================================
# Regions
# =====================================================
@dataclass(frozen=True)
class Region:
    """Axis-aligned box {|x - center|∞ <= halfwidth}."""
    center: tuple
    halfwidth: float
    label: str = "interior"

    def mask(self, grid):
        return np.all([np.abs(c - x0) <= self.halfwidth + 1e-12 for c, x0 in zip(grid.coordinates, self.center)],
                      axis=0)

    def margin(self, grid):
        """Distance from the region to ∂Ω (negative if it leaves Ω)."""
        corner = np.abs(np.asarray(self.center) - np.asarray(grid.omega_center))
        if grid.omega_kind == "ball":
            return grid.omega_radius - float(np.linalg.norm(corner + self.halfwidth))
        return grid.omega_radius - float(np.max(corner + self.halfwidth))


def inner_region(grid, fraction=0.35):
    """Box around the Ω centre inside the half-radius ball."""
    return Region(tuple(grid.omega_center), fraction * grid.omega_radius, "inner-half")


def check_region(grid, region, scale):
    if region.margin(grid) < scale:
        raise RegionError(f"region {region.label} needs margin >= {scale:.4g} inside Ω")
    if 2.0 * region.halfwidth < 2.0 * scale:
        raise RegionError(f"region too small for scale {scale:.4g}")


# =====================================================
# Derivatives and pair quotients
# =====================================================
def derivative_order(beta):
    if not beta > 0:
        raise ValueError("order must be positive")
    m = int(np.ceil(beta)) - 1
    return m, beta - m


def derivatives(u, m):
    """
    Centered-difference derivatives of order m stacked on the last axis.
    """
    values, h = u.values, u.grid.h
    if m == 0:
        return values[..., None]
    if m == 1:
        return np.stack([np.gradient(values, h, axis=axis, edge_order=2) for axis in range(values.ndim)], axis=-1)
    if m == 2:
        parts = []
        for axis in range(values.ndim):
            parts.append((np.roll(values, -1, axis) - 2.0 * values + np.roll(values, 1, axis)) / h ** 2)
        if values.ndim == 2:
            first = np.gradient(values, h, axis=0)
            parts.append(np.gradient(first, h, axis=1))
        return np.stack(parts, axis=-1)
    raise ValueError("orders above 2 are out of reach of second-order differences")


def _pairs_1d(mask, low, high):
    index = np.flatnonzero(mask)
    first, second = [], []
    for k in range(low, high + 1):
        start = index[:-k] if k < index.size else index[:0]
        keep = np.isin(start + k, index)
        first.append(start[keep])
        second.append(start[keep] + k)
    if not first:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    return np.concatenate(first), np.concatenate(second)


def _pairs_2d(grid, mask, scale, rng, samples):
    points = np.argwhere(mask)
    picks = points[rng.integers(len(points), size=samples)]
    radius = rng.uniform(scale, 2.0 * scale, size=samples) / grid.h
    angle = rng.uniform(0.0, 2.0 * np.pi, size=samples)
    partners = picks + np.rint(np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])).astype(int)
    inside = np.all((partners >= 0) & (partners < grid.points_per_axis), axis=1)
    picks, partners = picks[inside], partners[inside]
    inside = mask[tuple(partners.T)]
    picks, partners = picks[inside], partners[inside]
    distance = np.linalg.norm(picks - partners, axis=1) * grid.h
    keep = (distance >= scale * (1 - 1e-12)) & (distance <= 2.0 * scale * (1 + 1e-12))
    flat = lambda idx: np.ravel_multi_index(tuple(idx.T), grid.shape)
    return flat(picks[keep]), flat(partners[keep])


def pair_set(grid, region_mask, scale, seed=0, samples=PAIR_SAMPLES_2D):
    """Flat index pairs at distance in [scale, 2·scale]; all pairs in 1D, sampled in 2D."""
    if grid.n == 1:
        low = int(np.ceil(scale / grid.h - 1e-9))
        high = int(np.floor(2.0 * scale / grid.h + 1e-9))
        return _pairs_1d(region_mask, low, high)
    rng = np.random.default_rng(seed)
    logger.debug("Sampling %d pairs at scale %.4g (seed %d)", samples, scale, seed)
    return _pairs_2d(grid, region_mask, scale, rng, samples)


def _quotients(u, m, pairs):
    first, second = pairs
    if first.size == 0:
        raise RegionError("no point pairs at this scale inside the region")
    derived = derivatives(u, m).reshape(u.grid.size, -1)
    gap = np.linalg.norm(derived[first] - derived[second], axis=1)
    coords = np.column_stack([c.ravel() for c in u.grid.coordinates])
    distance = np.linalg.norm(coords[first] - coords[second], axis=1)
    return gap, distance


def holder_seminorm(u, beta, region, scale, seed=0):
    """
    max over pairs with |x - y| in [scale, 2·scale] of |D^m u(x) - D^m u(y)|/|x - y|^{β-m}.
    """
    check_region(u.grid, region, scale)
    m, exponent = derivative_order(beta)
    gap, distance = _quotients(u, m, pair_set(u.grid, region.mask(u.grid), scale, seed))
    return float(np.max(gap / distance ** exponent))


# =====================================================
# Exponent fits
# =====================================================
@dataclass
class HolderReport:
    order: float
    scales: list
    seminorms: list
    fitted_exponent: float
    fit_residual: float
    region: str
    stderr: float = float("nan")
    bounded: bool = True
    oscillations: list = field(default_factory=list)

    def to_frame(self):
        return pd.DataFrame({
            "scale": self.scales,
            "order": self.order,
            "seminorm": self.seminorms,
            "oscillation": self.oscillations,
        })

    def summary(self):
        return {
            "order": self.order,
            "fitted_exponent": self.fitted_exponent,
            "fit_residual": self.fit_residual,
            "stderr": self.stderr,
            "bounded": self.bounded,
            "region": self.region,
        }


def dyadic_scales(grid, region):
    scales = []
    scale = 4.0 * grid.h
    while region.margin(grid) >= scale and region.halfwidth >= scale:
        scales.append(scale)
        scale *= 2.0
    return scales


def fit_exponent(u, region, orders, seed=0):
    """
    Seminorms across dyadic scales for each order.

    fitted_exponent = m + slope of log(oscillation of D^m u) against log(scale);
    `bounded` iff the seminorm does not grow over the three finest scales
    (log-log slope >= -0.1).

    Returns:
        list[HolderReport], one per order.
    """
    scales = dyadic_scales(u.grid, region)
    if len(scales) < MIN_SCALES:
        raise FitError(f"only {len(scales)} dyadic scales fit in region {region.label}; need {MIN_SCALES}")
    mask = region.mask(u.grid)
    pairs = {scale: pair_set(u.grid, mask, scale, seed + j) for j, scale in enumerate(scales)}

    reports = []
    for beta in orders:
        m, exponent = derivative_order(beta)
        seminorms, oscillations = [], []
        for scale in scales:
            gap, distance = _quotients(u, m, pairs[scale])
            seminorms.append(float(np.max(gap / distance ** exponent)))
            oscillations.append(float(np.max(gap)))
        log_scale = np.log(scales)
        if min(oscillations) > 0:
            fit = stats.linregress(log_scale, np.log(oscillations))
            residual = np.log(oscillations) - (fit.intercept + fit.slope * log_scale)
            fitted, rms, stderr = m + fit.slope, float(np.sqrt(np.mean(residual ** 2))), float(fit.stderr)
        else:
            fitted, rms, stderr = float("inf"), 0.0, 0.0
        finest = np.asarray(seminorms[:3])
        if np.all(finest > 0):
            bounded = stats.linregress(log_scale[:3], np.log(finest)).slope >= BOUNDED_SLOPE
        else:
            bounded = True
        reports.append(HolderReport(beta, list(scales), seminorms, float(fitted), rms, region.label, stderr,
                                    bool(bounded), oscillations))
        logger.info("Order %.3g: fitted exponent %.4f, bounded=%s", beta, fitted, bounded)
    return reports


def boundary_fit(u, grid, bins=BOUNDARY_BINS):
    """
    Least squares of log u against log d(x) over d in [4h, 0.1·diam Ω].

    Points are averaged in log-spaced distance bins first so every decade of d
    carries the same weight in the fit.

    Returns:
        (kappa, stderr, count) where count is the number of usable points.
    """
    if u.sup_norm(grid.omega_mask) == 0.0:
        raise FitError("degenerate data")
    distance = grid.boundary_distance
    low, high = 4.0 * grid.h, 0.1 * grid.omega_diameter
    usable = grid.omega_mask & (distance >= low) & (distance <= high) & (u.values > 0)
    count = int(usable.sum())
    if count < MIN_BOUNDARY_POINTS:
        raise FitError(f"only {count} usable boundary points; need {MIN_BOUNDARY_POINTS}")

    log_d, log_u = np.log(distance[usable]), np.log(u.values[usable])
    edges = np.linspace(np.log(low), np.log(high), bins + 1)
    which = np.clip(np.digitize(log_d, edges) - 1, 0, bins - 1)
    filled = np.unique(which)
    if filled.size < 3:
        raise FitError("degenerate data")
    x = np.array([log_d[which == b].mean() for b in filled])
    y = np.array([log_u[which == b].mean() for b in filled])
    fit = stats.linregress(x, y)
    logger.debug("Boundary fit over %d points in %d bins: kappa %.4f ± %.4f", count, filled.size, fit.slope,
                 fit.stderr)
    return float(fit.slope), float(fit.stderr), count


def boundary_exponent(u, grid):
    """κ in u ≈ c·d(x)^κ near ∂Ω."""
    return boundary_fit(u, grid)[0]


# =====================================================
# Theorem bookkeeping
# =====================================================
def theorem_case(s, alpha, gamma=None):
    """
    Classify (s, α, γ) against the interior regularity statements.

    gamma=None means bounded (L∞) data: prediction 2s+α for s >= (1-α)/2,
    with an ε-loss at s = (1-α)/2. Otherwise prediction 2s+α+γ with
    case (a) s > (1-α)/2 and ⌊2s+α+γ⌋ <= 2, case (b) s <= (1-α)/2 and
    2s+α+γ >= 1.
    """
    threshold = (1.0 - alpha) / 2.0
    flags = []
    case = None
    if gamma is None:
        predicted = 2.0 * s + alpha
        if s < threshold - 1e-12:
            flags.append("outside-theorem")
        elif abs(s - threshold) <= 1e-12:
            flags += ["epsilon-loss", "outside-theorem"]
        case = "bounded-data"
    else:
        predicted = 2.0 * s + alpha + gamma
        if s > threshold and np.floor(predicted) <= 2:
            case = "a"
        elif s <= threshold and predicted >= 1.0:
            case = "b"
        else:
            flags.append("outside-theorem")
    if abs(predicted - round(predicted)) <= 1e-12:
        flags.append("integer-threshold")
        if "outside-theorem" not in flags:
            flags.append("outside-theorem")
    if predicted > 2.0:
        flags.append("prediction-capped")
    return {"case": case, "predicted_order": predicted, "tested_cap": min(predicted, 2.0), "flags": flags}


def orders_for(prediction, rough):
    """Orders below the capped prediction, plus one above it for rough data."""
    cap = prediction["tested_cap"]
    below = sorted({round(cap - 0.1, 3), round(0.5 * cap, 3)})
    above = []
    if rough and prediction["predicted_order"] + 0.2 <= 2.0:
        above.append(round(prediction["predicted_order"] + 0.2, 3))
    return below, above


@dataclass
class InteriorResult:
    reports: list
    prediction: dict
    below: list
    above: list
    solution: object = None

    def to_frame(self):
        frames = [r.to_frame() for r in self.reports]
        return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(
            columns=["scale", "order", "seminorm", "oscillation"])

    @property
    def bounded_below(self):
        return all(r.bounded for r in self.reports if r.order in self.below)


def interior_experiment(config):
    """
    Solve on the configured Ω, then fit seminorms on the inner region at
    orders below min(2s+α+γ, 2) and, for Weierstrass sources, above it.
    """
    problem = build_problem(config)
    source_kind = config["source.kind"]
    gamma = config["source.gamma"] if source_kind == "weierstrass" else (None if source_kind == "sign-change"
                                                                          else 0.99)
    prediction = theorem_case(config["operator.s"], config["coef.alpha"], gamma)
    if prediction["flags"]:
        logger.warning("Interior experiment flags: %s", ", ".join(prediction["flags"]))
    below, above = orders_for(prediction, source_kind == "weierstrass")

    report = solve_direct(problem, config["solver.tol"], config["solver.max_iter"])
    region = inner_region(problem.grid)
    reports = fit_exponent(report.u, region, below + above, seed=config["seed"])
    return InteriorResult(reports, prediction, below, above, report)
