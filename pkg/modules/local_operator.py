import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from modules.errors import CoefficientError, GridError
from modules.grid import Field

logger = logging.getLogger(__name__)

COEFFICIENT_KINDS = ("constant", "smooth-sine", "weierstrass-alpha")
BOUND_TOLERANCE = 1e-12


# =====================================================
# CoefficientField
# =====================================================
@dataclass(frozen=True)
class CoefficientField:
    """
    Grid samples of a(x) with a_minus <= a <= a_plus and Hölder label alpha.
    """
    samples: Field
    alpha: float
    a_minus: float
    a_plus: float
    generator_tag: str = "custom"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise CoefficientError("alpha must lie in (0,1)")
        if not self.a_minus > 0:
            raise CoefficientError("a_minus must be positive")
        if self.a_plus < self.a_minus:
            raise CoefficientError("a_plus must be at least a_minus")
        values = self.samples.values
        slack = BOUND_TOLERANCE * max(1.0, self.a_plus)
        if values.min() < self.a_minus - slack or values.max() > self.a_plus + slack:
            raise CoefficientError(
                f"coefficient samples [{values.min():.6g}, {values.max():.6g}] leave [{self.a_minus}, {self.a_plus}]"
            )
        if not np.isfinite(self.holder_ratio):
            raise CoefficientError("empirical Hölder ratio is not finite")

    @property
    def grid(self):
        return self.samples.grid

    @cached_property
    def holder_ratio(self):
        """max |a(x) - a(x + 2^j h e_i)| / (2^j h)^alpha over dyadic shifts."""
        values = self.samples.values
        grid = self.samples.grid
        ratio = 0.0
        shift = 1
        while shift < grid.points_per_axis:
            for axis in range(grid.n):
                diff = np.abs(
                    np.take(values, np.arange(shift, grid.points_per_axis), axis=axis)
                    - np.take(values, np.arange(grid.points_per_axis - shift), axis=axis)
                )
                ratio = max(ratio, float(diff.max()) / (shift * grid.h) ** self.alpha)
            shift *= 2
        return ratio

    @property
    def constant_value(self):
        """The value of a if it is constant, else None."""
        values = self.samples.values
        if values.max() - values.min() <= BOUND_TOLERANCE * max(1.0, abs(values.max())):
            return float(values.mean())
        return None

    def describe(self):
        return {
            "kind": self.generator_tag,
            "alpha": self.alpha,
            "a_minus": self.a_minus,
            "a_plus": self.a_plus,
            "holder_ratio": self.holder_ratio,
        }


# =====================================================
# Generators
# =====================================================
def weierstrass_profile(grid, exponent, seed=0):
    """
    Lacunary cosine sum Σ_k 2^{-k·exponent} Σ_i cos(2^k ω x_i + φ_{k,i}) with
    seeded phases, ω = π/b, stopped below the grid Nyquist frequency π/h,
    rescaled to [0, 1].
    """
    rng = np.random.default_rng(seed)
    base = np.pi / grid.box_halfwidth
    nyquist = np.pi / grid.h
    values = np.zeros(grid.shape)
    k = 0
    while base * 2 ** k < nyquist:
        phases = rng.uniform(0.0, 2.0 * np.pi, size=grid.n)
        for axis, coords in enumerate(grid.coordinates):
            values += 2.0 ** (-k * exponent) * np.cos(base * 2 ** k * coords + phases[axis])
        k += 1
    logger.debug("Weierstrass profile: %d octaves, exponent %.3g", k, exponent)
    span = values.max() - values.min()
    return (values - values.min()) / span if span > 0 else np.zeros(grid.shape)


def make_coefficient(kind, alpha, a_minus, a_plus, grid, seed=0):
    """
    Build a CoefficientField from the catalog.

    Args:
        kind: 'constant', 'smooth-sine' or 'weierstrass-alpha'.
        alpha: Hölder label in (0,1); exact exponent for 'weierstrass-alpha'.
        a_minus, a_plus: bounds, 0 < a_minus <= a_plus.
        grid: GridDomain.
        seed: phase seed for 'weierstrass-alpha'.
    """
    if not 0.0 < alpha < 1.0:
        raise CoefficientError("alpha must lie in (0,1)")
    if not 0.0 < a_minus <= a_plus:
        raise CoefficientError("coefficient bounds need 0 < a_minus <= a_plus")

    if kind == "constant":
        values = np.full(grid.shape, 0.5 * (a_minus + a_plus))
    elif kind == "smooth-sine":
        wave = sum(np.sin(np.pi * c / grid.box_halfwidth) for c in grid.coordinates) / grid.n
        values = a_minus + (a_plus - a_minus) * 0.5 * (1.0 + wave)
    elif kind == "weierstrass-alpha":
        values = a_minus + (a_plus - a_minus) * weierstrass_profile(grid, alpha, seed)
    else:
        raise CoefficientError(f"unknown coefficient kind '{kind}' (catalog: {', '.join(COEFFICIENT_KINDS)})")

    values = np.clip(values, a_minus, a_plus)
    return CoefficientField(Field(grid, values), alpha, a_minus, a_plus, kind)


# =====================================================
# div(a ∇u)
# =====================================================
def apply_div_a_grad(a, u, at):
    """
    Flux-form value Σ_axes [a_{+½}(u_{+1} - u_0) - a_{-½}(u_0 - u_{-1})]/h²
    with arithmetic face averages. Neighbours off the box read the exterior
    value and the face coefficient falls back to a at the node.
    """
    grid = u.grid
    if a.grid != grid:
        raise GridError("coefficient and field live on different grids")
    index = grid.check_index(at)
    centre = u.values[index]
    a_centre = a.samples.values[index]
    total = 0.0
    for axis in range(grid.n):
        for sign in (1, -1):
            neighbour = list(index)
            neighbour[axis] += sign
            if 0 <= neighbour[axis] < grid.points_per_axis:
                value = u.values[tuple(neighbour)]
                face = 0.5 * (a_centre + a.samples.values[tuple(neighbour)])
            else:
                value = u.exterior_value
                face = a_centre
            total += face * (value - centre)
    return float(total / grid.h ** 2)


def assemble_div_a_grad(a, grid):
    """
    Sparse matrix of div(a∇·) on the whole grid, Dirichlet (zero) beyond the box.
    Symmetric, negative definite, nonnegative off-diagonals.
    """
    if a.grid != grid:
        raise GridError("coefficient and grid do not match")
    values = a.samples.values
    index = np.arange(grid.size).reshape(grid.shape)
    inv_h2 = 1.0 / grid.h ** 2

    rows, cols, data = [], [], []
    diagonal = np.zeros(grid.shape)
    for axis in range(grid.n):
        lower = [slice(None)] * grid.n
        upper = [slice(None)] * grid.n
        lower[axis] = slice(0, -1)
        upper[axis] = slice(1, None)
        lower, upper = tuple(lower), tuple(upper)

        face = 0.5 * (values[lower] + values[upper]) * inv_h2
        rows += [index[lower].ravel(), index[upper].ravel()]
        cols += [index[upper].ravel(), index[lower].ravel()]
        data += [face.ravel(), face.ravel()]
        diagonal[lower] -= face
        diagonal[upper] -= face

        # 박스 밖 이웃 (Dirichlet)
        for edge in (0, grid.points_per_axis - 1):
            boundary = [slice(None)] * grid.n
            boundary[axis] = edge
            diagonal[tuple(boundary)] -= values[tuple(boundary)] * inv_h2

    rows.append(index.ravel())
    cols.append(index.ravel())
    data.append(diagonal.ravel())
    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(grid.size, grid.size)
    ).tocsr()
    logger.debug("Assembled div(a grad) matrix: %d unknowns, %d nonzeros", grid.size, matrix.nnz)
    return matrix


def dirichlet_energy(a, u):
    """-Σ u·div(a∇u)·hⁿ for an exterior-zero field."""
    matrix = assemble_div_a_grad(a, u.grid)
    flat = u.values.ravel()
    return float(-flat @ (matrix @ flat)) * u.grid.h ** u.grid.n
