"""
Heat kernel of the constant-coefficient mixed operator from its symbol

    A(ξ) = 2C_s·symbol(ξ) + a|ξ|²,     H(t,·) = F^{-1}[exp(-tA)],

plus the kernel checks (mass, moments, Lipschitz seminorm, semigroup) and
the smoothing-invariance harness v = H(1,·)∗v.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from modules.errors import UnderResolvedError, ValidationError
from modules.grid import Field, centered_box
from modules.local_operator import assemble_div_a_grad, make_coefficient
from modules.measure import multiplier, sphere_directions
from modules.nonlocal_operator import apply_stencil, assemble_stencil, frequency_grid
from modules.solve import MixedProblem, MixedSystem

logger = logging.getLogger(__name__)

RESOLUTION_FLOOR = 1e-14
IMAG_TOLERANCE = 1e-12


# =====================================================
# Symbol
# =====================================================
def _evaluate(spec, a_const, xi):
    values = a_const * np.sum(xi ** 2, axis=-1)
    if spec is not None:
        values = values - multiplier(spec, xi)
    return values


@dataclass
class MixedSymbol:
    spec: object
    a_const: float
    grid: object
    values: np.ndarray = field(repr=False)

    @property
    def order(self):
        """s of the nonlocal part (1 for a purely local symbol)."""
        return self.spec.s if self.spec is not None else 1.0

    @property
    def frequencies(self):
        return frequency_grid(self.grid.n, self.grid.points_per_axis, self.grid.h)

    def on(self, grid):
        return mixed_symbol(self.spec, self.a_const, grid)

    def at(self, xi):
        """A at arbitrary frequencies (last axis of size n)."""
        return _evaluate(self.spec, self.a_const, np.asarray(xi, dtype=float))


def mixed_symbol(spec, a_const, grid):
    """
    Sample A(ξ) on the FFT frequency grid of `grid` (unshifted layout).
    """
    if a_const < 0:
        raise ValidationError("a_const must be nonnegative")
    if spec is None and a_const == 0:
        raise ValidationError("symbol needs a nonlocal part or a_const > 0")
    xi = frequency_grid(grid.n, grid.points_per_axis, grid.h)
    return MixedSymbol(spec, float(a_const), grid, _evaluate(spec, a_const, xi))


def kernel_grid(grid, box_factor=4):
    """Box `box_factor` times the solve box, same h, odd point count (x = 0 is a node)."""
    points = box_factor * (grid.points_per_axis - 1) + 1
    if points % 2 == 0:
        points += 1
    halfwidth = grid.h * (points - 1) / 2.0
    return centered_box(grid.n, halfwidth, points)


def symbol_bounds(symbol):
    """
    λ = min A/min(|ξ|^{2s}, |ξ|²) and Λ = max A/max(|ξ|^{2s}, |ξ|²) over the
    lattice ξ ≠ 0 and the unit sphere.

    On |ξ| = 1 both envelopes equal 1, so those samples enter both ratios and
    λ ≤ A(θ) ≤ Λ holds for every sampled direction θ.
    """
    xi = symbol.frequencies
    radius = np.sqrt(np.sum(xi ** 2, axis=-1))
    nonzero = radius > 0
    low = np.minimum(radius ** (2.0 * symbol.order), radius ** 2)[nonzero]
    high = np.maximum(radius ** (2.0 * symbol.order), radius ** 2)[nonzero]
    values = symbol.values[nonzero]
    on_sphere = symbol.at(sphere_directions(symbol.grid.n))
    lower = min(float(np.min(values / low)), float(np.min(on_sphere)))
    upper = max(float(np.max(values / high)), float(np.max(on_sphere)))
    return lower, upper


# =====================================================
# Kernel slices
# =====================================================
@dataclass
class KernelSlice:
    t: float
    values: Field
    mass: float
    moment: float
    delta: float

    def summary(self):
        return {"t": self.t, "mass": self.mass, "moment": self.moment, "delta": self.delta}


def _check_resolution(symbol, t):
    points = symbol.grid.points_per_axis
    edge = (points - 1) // 2
    index = np.meshgrid(*([np.abs(sfft.fftfreq(points, 1.0 / points))] * symbol.grid.n), indexing="ij")
    shell = np.any([np.rint(i) >= edge for i in index], axis=0)
    smallest = float(symbol.values[shell].min())
    tail = np.exp(-t * smallest)
    if tail >= RESOLUTION_FLOOR:
        power = 2.0 if symbol.a_const > 0 else 2.0 * symbol.order
        needed = (np.log(1.0 / RESOLUTION_FLOOR) / max(t * smallest, 1e-300)) ** (1.0 / power)
        raise UnderResolvedError(
            f"kernel under-resolved: exp(-tA) = {tail:.2e} at the frequency edge; "
            f"use h <= {symbol.grid.h / needed:.3g} (currently {symbol.grid.h:.3g}) or a larger t"
        )


def kernel(symbol, t, delta=None):
    """
    H(t,·) on the symbol's grid: inverse transform of exp(-tA) divided by hⁿ,
    with x = 0 at the centre node.
    """
    if not t > 0:
        raise ValidationError("t must be positive")
    _check_resolution(symbol, t)
    grid = symbol.grid
    raw = sfft.fftshift(sfft.ifftn(np.exp(-t * symbol.values))) / grid.h ** grid.n
    residue = float(np.max(np.abs(raw.imag)))
    if residue > IMAG_TOLERANCE * float(np.max(np.abs(raw.real))):
        logger.warning("Kernel imaginary residue %.3e discarded", residue)
    values = Field(grid, raw.real)
    mass = float(values.values.sum()) * grid.h ** grid.n

    delta = 0.5 * symbol.order if delta is None else delta
    moment = moment_check(KernelSlice(t, values, mass, float("nan"), delta), symbol.order, delta)
    logger.info("Kernel t=%g: mass %.12f, moment %.6g (delta %.3g)", t, mass, moment, delta)
    return KernelSlice(t, values, mass, moment, delta)


def _radius(grid):
    return np.sqrt(sum(c ** 2 for c in grid.coordinates))


def moment_check(k, s, delta):
    """∫(1 + |x|^{2s-δ}) H dx by the grid sum."""
    if not 0.0 < delta < 2.0 * s:
        raise ValidationError("delta must lie in (0, 2s)")
    grid = k.values.grid
    weight = 1.0 + _radius(grid) ** (2.0 * s - delta)
    return float(np.sum(weight * k.values.values)) * grid.h ** grid.n


def lipschitz_seminorm(k):
    """max |H(x) - H(y)|/h over grid edges."""
    values = k.values.values
    return max(float(np.max(np.abs(np.diff(values, axis=axis)))) for axis in range(values.ndim)) / k.values.grid.h


def refinement_study(spec, a_const, grid, t=1.0, delta=None, box_factor=4):
    """
    Moment and Lipschitz seminorm at N and 2N points per axis (same box).

    Returns:
        dict with both values, relative changes and pass flags (5% / 10%).
    """
    coarse_grid = kernel_grid(grid, box_factor)
    fine_grid = kernel_grid(grid.refine(), box_factor)
    coarse = kernel(mixed_symbol(spec, a_const, coarse_grid), t, delta)
    fine = kernel(mixed_symbol(spec, a_const, fine_grid), t, delta)
    lip_coarse, lip_fine = lipschitz_seminorm(coarse), lipschitz_seminorm(fine)
    moment_change = abs(fine.moment - coarse.moment) / abs(coarse.moment)
    lipschitz_change = abs(lip_fine - lip_coarse) / lip_coarse
    return {
        "moment_N": coarse.moment,
        "moment_2N": fine.moment,
        "moment_change": moment_change,
        "moment_stable": bool(np.isfinite(fine.moment) and moment_change <= 0.05),
        "lipschitz_N": lip_coarse,
        "lipschitz_2N": lip_fine,
        "lipschitz_change": lipschitz_change,
        "lipschitz_stable": bool(lipschitz_change <= 0.10),
    }


def periodic_convolution(k, values):
    """(H ∗ values) on the kernel's grid, treated as periodic."""
    grid = k.values.grid
    transformed = sfft.fftn(sfft.ifftshift(k.values.values)) * grid.h ** grid.n
    return sfft.ifftn(sfft.fftn(values) * transformed).real


def semigroup_defect(symbol, t1=1.0, t2=1.0):
    """‖H(t1)∗H(t2) - H(t1+t2)‖∞."""
    first, second, joint = kernel(symbol, t1), kernel(symbol, t2), kernel(symbol, t1 + t2)
    product = sfft.fftshift(periodic_convolution(first, sfft.ifftshift(second.values.values)))
    return float(np.max(np.abs(product - joint.values.values)))


def gaussian_kernel(grid, a_const, t):
    """Closed form for the local symbol a|ξ|²: variance 2at per axis."""
    variance = 2.0 * a_const * t
    radius2 = sum(c ** 2 for c in grid.coordinates)
    return np.exp(-radius2 / (2.0 * variance)) / (2.0 * np.pi * variance) ** (grid.n / 2.0)


# =====================================================
# Smoothing invariance (v = H(1,·)∗v)
# =====================================================
def _inner_mask(grid):
    return np.all([np.abs(c) <= grid.box_halfwidth / 4.0 for c in grid.coordinates], axis=0)


def kernel_moments(k):
    """(∫H, ∫yH) by grid sums about the centre node."""
    grid = k.values.grid
    points = grid.points_per_axis
    offsets = (np.arange(points) - points // 2) * grid.h
    if points % 2 == 0:
        # -N/2·h 와 +N/2·h 는 같은 주기 점
        offsets[0] = 0.0
    weights = k.values.values * grid.h ** grid.n
    first = [float(np.sum(weights * y)) for y in np.meshgrid(*([offsets] * grid.n), indexing="ij")]
    return float(weights.sum()), np.array(first)


def _affine_fit(v):
    grid = v.grid
    design = np.column_stack([np.ones(grid.size)] + [c.ravel() for c in grid.coordinates])
    coefficients, *_ = np.linalg.lstsq(design, v.values.ravel(), rcond=None)
    return coefficients, (design @ coefficients).reshape(grid.shape)


@dataclass
class Smoothed:
    original: np.ndarray
    smoothed: np.ndarray
    affine: np.ndarray
    remainder: np.ndarray
    gradient: np.ndarray
    mass: float
    first_moment: np.ndarray
    kernel_l1: float

    def defect(self, mask):
        return float(np.max(np.abs(self.original - self.smoothed)[mask]))

    def averaging_bound(self, mask):
        """
        v - H∗v = (1 - ∫H)p + ∫yH·∇p + (1 - ∫H)r + Σ_y H(y)(r(x) - r(x-y))hⁿ
        with r = v - p, so the defect is at most
        ‖H‖₁·osc(r) + |1 - ∫H|·(|p| + ‖r‖∞) + |∫yH·∇p|.
        """
        drift = abs(1.0 - self.mass) * (float(np.max(np.abs(self.affine[mask])))
                                        + float(np.max(np.abs(self.remainder))))
        return self.kernel_l1 * float(np.ptp(self.remainder)) + drift + abs(float(self.first_moment @ self.gradient))


def smooth(symbol, v, t=1.0):
    """
    H(t,·)∗v on v's grid through the computed kernel.

    v = p + r with p its least-squares affine part. H∗p = (∫H)p - (∫yH)·∇p
    uses the kernel's own moments; H∗r is the periodic convolution.
    """
    if symbol.grid != v.grid:
        symbol = symbol.on(v.grid)
    grid = v.grid
    k = kernel(symbol, t)
    mass, first = kernel_moments(k)
    coefficients, affine = _affine_fit(v)
    gradient = coefficients[1:]
    remainder = v.values - affine
    smoothed = mass * affine - float(first @ gradient) + periodic_convolution(k, remainder)
    kernel_l1 = float(np.abs(k.values.values).sum()) * grid.h ** grid.n
    return Smoothed(v.values, smoothed, affine, remainder, gradient, mass, first, kernel_l1)


def smoothing_invariance(symbol, v):
    """‖v - H(1,·)∗v‖∞ over the inner quarter box."""
    return smooth(symbol, v).defect(_inner_mask(v.grid))


def oscillation_contraction(symbol, v):
    """(osc of v, osc of H∗v) over the inner quarter box."""
    result = smooth(symbol, v)
    inner = _inner_mask(v.grid)
    return float(np.ptp(result.original[inner])), float(np.ptp(result.smoothed[inner]))


def harmonic_field(spec, a_const, grid, max_points=None):
    """
    Solve 𝓔v = 0 in Ω with smooth bounded data on the rest of the box
    (tapered to zero at the box edge). Returns the full field.
    """
    coords = grid.coordinates
    taper = np.prod([np.cos(0.5 * np.pi * np.clip((np.abs(c) - 0.5 * grid.box_halfwidth)
                                                   / (0.5 * grid.box_halfwidth), 0.0, 1.0)) ** 2
                     for c in coords], axis=0)
    data = np.cos(coords[0]) + (0.5 * np.sin(0.7 * coords[1] + 0.3) if grid.n == 2 else 0.3 * coords[0])
    exterior = np.where(grid.omega_mask, 0.0, data * taper)

    coefficient = make_coefficient("constant", 0.5, a_const, a_const, grid) if a_const > 0 else None
    problem = MixedProblem(spec, coefficient, grid, Field.zeros(grid))
    system = MixedSystem(problem, max_points)

    rhs = np.zeros(system.size)
    if spec is not None:
        full = assemble_stencil(spec, grid, max_points)
        rhs += system.restrict(apply_stencil(full, Field(grid, exterior)))
    if coefficient is not None:
        rhs += (assemble_div_a_grad(coefficient, grid) @ exterior.ravel())[system.omega]
    interior, _ = system.solve(rhs)
    return Field(grid, exterior + system.embed(interior))
