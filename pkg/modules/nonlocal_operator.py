"""
Discrete stable operator
    Lu(x) = ∫_S ∫_R (u(x+θr) + u(x-θr) - 2u(x)) |r|^{-1-2s} dr dμ(θ)
on uniform grids.

Radial quadrature per direction θ:
  - [0, c)      Taylor zone, δ(x, θr) ≈ r²∂²_θθ u(x) with a centered difference
  - [c, R]      paired panels, product rule against r^{-1-2s}
  - (R, ∞)      analytic tail, the integrand is 2(ext - u(x))
Directions θ and -θ give the same δ, so the measure is folded onto half of
the sphere before building nodes.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
from numpy.polynomial import legendre
from scipy import fft as sfft
from scipy import signal

from modules.errors import GridError, OperatorError, StencilTooLargeError, ValidationError
from modules.grid import Field
from modules.measure import multiplier, validate

logger = logging.getLogger(__name__)

# Dense stencil caps (points per axis); stencils are applied by FFT convolution
MAX_POINTS = {1: 4096, 2: 256}

LATTICE_RANGE = 4
GAUSS_POINTS = 16
_GL_NODES, _GL_WEIGHTS = legendre.leggauss(GAUSS_POINTS)


# =====================================================
# Direction handling
# =====================================================
def _lattice_candidates():
    vectors = []
    for p in range(0, LATTICE_RANGE + 1):
        for q in range(-LATTICE_RANGE, LATTICE_RANGE + 1):
            if (p, q) == (0, 0) or np.gcd(p, q) != 1 or (p == 0 and q < 0):
                continue
            vectors.append((p, q))
    return vectors


LATTICE_VECTORS = _lattice_candidates()


def lattice_vector(direction):
    """Primitive integer vector parallel to `direction`, or None."""
    direction = np.asarray(direction, dtype=float)
    if direction.size == 1:
        return (1,)
    for vector in LATTICE_VECTORS:
        unit = np.asarray(vector, dtype=float) / np.hypot(*vector)
        if np.allclose(direction, unit, atol=1e-9) or np.allclose(direction, -unit, atol=1e-9):
            return vector
    return None


def folded_directions(measure):
    """
    Directions on half of the sphere with the weights of θ and -θ combined.

    Returns:
        list of (direction ndarray, weight).
    """
    directions, weights = measure.nodes()
    folded = []
    for direction, weight in zip(directions, weights):
        if weight == 0:
            continue
        nonzero = direction[np.abs(direction) > 1e-12]
        if nonzero.size and nonzero[0] < 0:
            direction = -direction
        for entry in folded:
            if np.allclose(entry[0], direction, atol=1e-12):
                entry[1] += weight
                break
        else:
            folded.append([direction.copy(), float(weight)])
    return [(d, w) for d, w in folded]


# =====================================================
# Radial rule
# =====================================================
def radial_rule(start, stop, step, s, points_per_decade=0):
    """
    Product rule for ∫_start^end g(r) r^{-1-2s} dr with nodes on multiples of `step`.

    Panels come in pairs of equal width and use quadratic interpolation of g;
    a pair whose quadratic weights are not all positive uses linear weights.
    With points_per_decade > 0 the width grows geometrically in powers of two.

    Returns:
        (nodes, weights, end): end >= stop is the last node.
    """
    pairs = []
    r = start
    while r < stop - 1e-9 * step:
        width = step
        if points_per_decade:
            factor = max(1.0, r * np.log(10.0) / (points_per_decade * step))
            width = step * 2 ** int(np.floor(np.log2(factor)))
        pairs.append((r, width))
        r += 2.0 * width
    if not pairs:
        return np.zeros(0), np.zeros(0), start

    starts = np.array([p[0] for p in pairs])
    widths = np.array([p[1] for p in pairs])

    # Gauss–Legendre on each half panel, t in [0, 2]
    half = 0.5 * (_GL_NODES + 1.0)
    t = np.concatenate([half, half + 1.0])
    gw = np.concatenate([_GL_WEIGHTS, _GL_WEIGHTS]) * 0.5
    r_nodes = starts[:, None] + widths[:, None] * t[None, :]
    kernel = r_nodes ** (-1.0 - 2.0 * s) * widths[:, None] * gw[None, :]

    quadratic = np.stack([
        kernel @ ((t - 1.0) * (t - 2.0) / 2.0),
        kernel @ (-t * (t - 2.0)),
        kernel @ (t * (t - 1.0) / 2.0),
    ], axis=1)
    left = t <= 1.0
    linear = np.stack([
        kernel @ np.where(left, 1.0 - t, 0.0),
        kernel @ np.where(left, t, 2.0 - t),
        kernel @ np.where(left, 0.0, t - 1.0),
    ], axis=1)
    fallback = np.any(quadratic <= 0, axis=1)
    if fallback.any():
        logger.debug("Radial rule: %d panel pairs use linear weights", int(fallback.sum()))
    local = np.where(fallback[:, None], linear, quadratic)

    # 이웃 패널이 공유하는 끝점은 가중치를 합친다
    nodes = np.concatenate([starts, starts + widths, starts + 2.0 * widths])
    weights = np.concatenate([local[:, 0], local[:, 1], local[:, 2]])
    _, first, inverse = np.unique(np.round(nodes / step, 6), return_index=True, return_inverse=True)
    merged = np.zeros(first.size)
    np.add.at(merged, inverse.ravel(), weights)
    return nodes[first], merged, float(starts[-1] + 2.0 * widths[-1])


# =====================================================
# Quadrature nodes shared by apply_L and the stencil
# =====================================================
@dataclass(frozen=True)
class QuadratureNodes:
    """
    Lu(x) ≈ Σ_k coefs[k]·δ(x, h·offsets[k]) - tail_coefficient·(u(x) - ext).
    Offsets are in grid units; only one of ±offset is stored.
    """
    offsets: np.ndarray
    coefs: np.ndarray
    tail_coefficient: float


def check_spec(spec):
    violations = validate(spec.measure)
    if violations:
        raise OperatorError("invalid measure: " + "; ".join(violations))


def quadrature_nodes(spec, grid):
    if spec.n != grid.n:
        raise OperatorError(f"operator dimension {spec.n} does not match grid dimension {grid.n}")
    check_spec(spec)

    h = grid.h
    s = spec.s
    cut = spec.inner_cut * h
    tail_radius = spec.tail_radius if spec.tail_radius is not None else grid.box_diameter
    if tail_radius <= cut:
        raise OperatorError(f"tail_radius {tail_radius} must exceed the inner cut {cut}")

    offsets, coefs = [], []
    tail = 0.0
    for direction, weight in folded_directions(spec.measure):
        vector = lattice_vector(direction)
        if vector is not None:
            lattice = np.asarray(vector, dtype=float)
            step = h * np.linalg.norm(lattice)
            start = step * np.ceil(cut / step - 1e-9)
            rho = step
        else:
            step = h
            start = cut
            rho = cut

        # --- Taylor zone: 2∫_0^c r^{1-2s} dr · δ(x, θρ)/ρ² ---
        taylor = 2.0 * weight * start ** (2.0 - 2.0 * s) / ((2.0 - 2.0 * s) * rho ** 2)
        offsets.append(lattice if vector is not None else direction * rho / h)
        coefs.append(taylor)

        # --- Middle zone ---
        nodes, weights, end = radial_rule(start, tail_radius, step, s, spec.radial_points_per_decade)
        if vector is not None:
            multiples = np.rint(nodes / step)
            offsets.extend(multiples[:, None] * lattice[None, :])
        else:
            offsets.extend(nodes[:, None] * direction[None, :] / h)
        coefs.extend(2.0 * weight * weights)

        # --- Tail: 2∫_R^∞ 2(ext - u) r^{-1-2s} dr ---
        tail += 2.0 * weight * end ** (-2.0 * s) / s

    if not offsets:
        return QuadratureNodes(np.zeros((0, grid.n)), np.zeros(0), 0.0)
    return QuadratureNodes(np.asarray(offsets, dtype=float).reshape(-1, grid.n), np.asarray(coefs), tail)


# =====================================================
# Pointwise evaluation
# =====================================================
def second_difference(u, x, y):
    """
    δ(u, x, y) = u(x+y) + u(x-y) - 2u(x).

    Args:
        u: Field.
        x: grid index tuple.
        y: displacement vector in physical units.
    """
    index = np.asarray(u.grid.check_index(x), dtype=float)
    shift = np.atleast_1d(np.asarray(y, dtype=float)) / u.grid.h
    return float(u.sample(index + shift) + u.sample(index - shift) - 2.0 * u.values[tuple(index.astype(int))])


def _apply_nodes(nodes, u, indices):
    indices = np.asarray(indices, dtype=float)
    centre = u.values[tuple(indices.astype(int).T)]
    total = -nodes.tail_coefficient * (centre - u.exterior_value)
    # 메모리 절약을 위해 노드 묶음 단위로 계산
    for chunk in np.array_split(np.arange(nodes.coefs.size), max(1, nodes.coefs.size // 4096)):
        if chunk.size == 0:
            continue
        offsets = nodes.offsets[chunk]
        plus = u.sample(indices[:, None, :] + offsets[None, :, :])
        minus = u.sample(indices[:, None, :] - offsets[None, :, :])
        total += (plus + minus - 2.0 * centre[:, None]) @ nodes.coefs[chunk]
    return total


def apply_L(spec, u, at):
    """
    Quadrature value of Lu at one grid point.

    Args:
        spec: OperatorSpec.
        u: Field (exterior value used off the box).
        at: grid index tuple.
    Returns:
        float
    """
    index = u.grid.check_index(at)
    nodes = quadrature_nodes(spec, u.grid)
    return float(_apply_nodes(nodes, u, np.asarray([index]))[0])


def apply_L_points(spec, u, indices):
    """Vectorized apply_L over an (m, n) array of grid indices."""
    indices = np.atleast_2d(np.asarray(indices, dtype=int))
    for index in indices:
        u.grid.check_index(index)
    return _apply_nodes(quadrature_nodes(spec, u.grid), u, indices)


# =====================================================
# Stencil
# =====================================================
@dataclass(frozen=True)
class Stencil:
    """
    Lu(x) = Σ_j weights[j]·u(x + offsets[j]) + diagonal·u(x) + tail_coefficient·ext.

    tail_coefficient is the full coefficient of -u(x) contributed by the far
    field, so diagonal = -(Σ weights + tail_coefficient).
    """
    offsets: np.ndarray
    weights: np.ndarray
    diagonal: float
    tail_coefficient: float

    @property
    def n(self):
        return self.offsets.shape[1]

    @property
    def radius(self):
        return int(np.abs(self.offsets).max()) if self.offsets.size else 0

    @cached_property
    def kernel(self):
        """Dense (2K+1)^n array with the diagonal at the centre."""
        radius = self.radius
        dense = np.zeros((2 * radius + 1,) * self.n)
        dense[tuple((self.offsets + radius).T)] = self.weights
        dense[(radius,) * self.n] = self.diagonal
        return dense

    def cropped(self, radius):
        """
        Drop offsets beyond `radius` (max norm). The diagonal is kept, so the
        result is exact only on fields supported within `radius` cells.
        """
        keep = np.abs(self.offsets).max(axis=1) <= radius
        return Stencil(self.offsets[keep], self.weights[keep], self.diagonal, self.tail_coefficient)

    def to_frame(self):
        columns = {f"offset_{'ij'[i]}": self.offsets[:, i] for i in range(self.n)}
        columns["weight"] = self.weights
        frame = pd.DataFrame(columns)
        centre = {f"offset_{'ij'[i]}": [0] for i in range(self.n)}
        centre["weight"] = [self.diagonal]
        return pd.concat([pd.DataFrame(centre), frame], ignore_index=True)


def assemble_stencil(spec, grid, max_points=None):
    """
    Collect the quadrature nodes into integer offsets with multilinear
    interpolation weights.
    """
    cap = max_points if max_points is not None else MAX_POINTS[grid.n]
    if grid.points_per_axis > cap:
        raise StencilTooLargeError(
            f"grid too large for dense stencil: {grid.points_per_axis} points per axis exceeds cap {cap}"
        )

    nodes = quadrature_nodes(spec, grid)
    reach = int(np.ceil(np.abs(nodes.offsets).max())) + 1 if nodes.coefs.size else 0
    dense = np.zeros((2 * reach + 1,) * grid.n)
    centre = np.full(grid.n, reach)

    diagonal = -2.0 * nodes.coefs.sum() - nodes.tail_coefficient
    base = np.floor(nodes.offsets + 1e-9)
    frac = np.clip(nodes.offsets - base, 0.0, 1.0)
    frac = np.where(frac < 1e-9, 0.0, frac)
    for corner in np.ndindex(*(2,) * grid.n):
        corner = np.asarray(corner)
        share = np.prod(np.where(corner == 1, frac, 1.0 - frac), axis=1) * nodes.coefs
        used = share != 0
        target = (base[used] + corner).astype(int)
        np.add.at(dense, tuple((centre + target).T), share[used])
        np.add.at(dense, tuple((centre - target).T), share[used])

    # 보간이 중심점에 떨어진 몫은 대각으로 옮긴다
    diagonal += dense[tuple(centre)]
    dense[tuple(centre)] = 0.0

    support = np.argwhere(dense != 0)
    stencil = Stencil(
        offsets=(support - centre).astype(int),
        weights=dense[tuple(support.T)],
        diagonal=float(diagonal),
        tail_coefficient=float(nodes.tail_coefficient),
    )
    logger.info("Assembled stencil: %d offsets, radius %d, diagonal %.6g", len(stencil.weights),
                stencil.radius, stencil.diagonal)
    return stencil


def apply_stencil(stencil, u):
    """Stencil applied at every grid point (exterior value used off the box)."""
    shifted = u.values - u.exterior_value
    if stencil.weights.size == 0:
        return Field(u.grid, stencil.diagonal * shifted, 0.0)
    values = signal.fftconvolve(shifted, stencil.kernel, mode="same")
    return Field(u.grid, values, 0.0)


# =====================================================
# FFT fast path
# =====================================================
def frequency_grid(n, points, h, real=False):
    """Angular frequencies (ij indexing, last axis of size n)."""
    axes = [2.0 * np.pi * sfft.fftfreq(points, d=h)] * n
    if real:
        axes[-1] = 2.0 * np.pi * sfft.rfftfreq(points, d=h)
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def apply_fft(spec, u, padding=4):
    """
    Multiply the transform of u - ext by the exact multiplier of L.

    The field is zero-padded to `padding` times its size per axis and treated
    as periodic, so use it only for smooth, centrally supported fields; the
    periodic images contribute about mass·|period|^{-1-2s}.
    """
    grid = u.grid
    size = sfft.next_fast_len(padding * grid.points_per_axis, real=True)
    shape = (size,) * grid.n
    transformed = sfft.rfftn(u.values - u.exterior_value, s=shape)
    xi = frequency_grid(grid.n, size, grid.h, real=True)
    values = sfft.irfftn(transformed * multiplier(spec, xi), s=shape)
    crop = tuple(slice(0, grid.points_per_axis) for _ in range(grid.n))
    return Field(grid, values[crop], u.exterior_value)


# =====================================================
# Bilinear form
# =====================================================
def bilinear_energy(spec, u, v, stencil=None):
    """
    Discrete ½∫∫∫ (u(x)-u(x+θr))(v(x)-v(x+θr)) |r|^{-1-2s} dr dμ dx for
    exterior-zero fields:

        hⁿ [ (Σw + T)·<u, v> - Σ_j w_j Σ_x u(x) v(x + o_j) ]

    Equal to -hⁿ Σ v·(stencil applied to u).
    """
    if u.grid != v.grid:
        raise GridError("bilinear_energy needs both fields on the same grid")
    if u.exterior_value != 0 or v.exterior_value != 0:
        raise ValidationError("bilinear_energy needs exterior-zero fields")
    stencil = stencil if stencil is not None else assemble_stencil(spec, u.grid)
    return 0.5 * (_energy(stencil, u.values, v.values) + _energy(stencil, v.values, u.values)) * u.grid.h ** u.grid.n


def _energy(stencil, a, b):
    points = a.shape[0]
    inside = np.all(np.abs(stencil.offsets) < points, axis=1)
    offsets, weights = stencil.offsets[inside], stencil.weights[inside]
    # correlation[o + N - 1] = Σ_x a(x) b(x + o)
    correlation = signal.fftconvolve(b, a[(slice(None, None, -1),) * a.ndim], mode="full")
    cross = correlation[tuple((offsets + points - 1).T)]
    return -stencil.diagonal * float(np.sum(a * b)) - float(weights @ cross)
