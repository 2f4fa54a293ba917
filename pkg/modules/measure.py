"""
Spectral measures on S^{n-1} (n = 1, 2) and the Fourier symbol of L.

A measure is a list of atoms plus an optional density sampled on an
equispaced angle grid (2D) or on the pair {+1, -1} (1D).  Every routine
below works on the combined node list returned by `SpectralMeasure.nodes()`.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import special

from modules.errors import ConfigError, ConfigIssue, MeasureError, OperatorError

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-12
EVEN_TOLERANCE = 1e-12

# 밀도 카탈로그 (φ -> φ+π 에 대해 짝함수인 것만)
DENSITY_CATALOG = {
    "constant": lambda phi: np.ones_like(phi),
    "cos2": lambda phi: np.cos(phi) ** 2,
    "bimodal": lambda phi: 1.0 + 0.5 * np.cos(2.0 * phi),
    "axis-peaked": lambda phi: np.cos(phi) ** 8 + np.sin(phi) ** 8,
}


class Atom(NamedTuple):
    direction: tuple
    weight: float


@dataclass(frozen=True)
class SpectralMeasure:
    n: int
    atoms: tuple = ()
    density: np.ndarray | None = None
    label: str = "custom"

    def __post_init__(self):
        if self.n not in (1, 2):
            raise MeasureError(f"measures are supported in dimension 1 or 2, got {self.n}")
        atoms = tuple(Atom(tuple(float(c) for c in np.atleast_1d(d)), float(w)) for d, w in self.atoms)
        for i, atom in enumerate(atoms):
            if len(atom.direction) != self.n:
                raise MeasureError(f"atom {i} direction has {len(atom.direction)} components, expected {self.n}")
        object.__setattr__(self, "atoms", atoms)
        if self.density is not None:
            density = np.asarray(self.density, dtype=float)
            if density.ndim != 1 or (self.n == 1 and density.size != 2) or (self.n == 2 and density.size < 4):
                raise MeasureError("density must hold 2 values in 1D or at least 4 equispaced angle samples in 2D")
            object.__setattr__(self, "density", density)

    def nodes(self):
        """
        All quadrature nodes of the measure.

        Returns:
            (directions, weights): arrays of shape (k, n) and (k,).
        """
        directions = [atom.direction for atom in self.atoms]
        weights = [atom.weight for atom in self.atoms]
        if self.density is not None:
            if self.n == 1:
                # counting measure on S^0 = {+1, -1}
                directions += [(1.0,), (-1.0,)]
                weights += list(self.density)
            else:
                phi = density_angles(self.density.size)
                directions += list(zip(np.cos(phi), np.sin(phi)))
                weights += list(self.density * (2.0 * np.pi / self.density.size))
        if not directions:
            return np.zeros((0, self.n)), np.zeros(0)
        return np.asarray(directions, dtype=float), np.asarray(weights, dtype=float)

    @cached_property
    def total_mass(self):
        return float(np.sum(self.nodes()[1]))

    def describe(self):
        return {
            "label": self.label,
            "atoms": [[list(a.direction), a.weight] for a in self.atoms],
            "density_samples": 0 if self.density is None else int(self.density.size),
            "total_mass": self.total_mass,
        }


def density_angles(count):
    return 2.0 * np.pi * np.arange(count) / count


def sphere_directions(n, count=720):
    """Unit vectors: ±1 in 1D, `count` equispaced angles in 2D."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    phi = density_angles(count)
    return np.column_stack([np.cos(phi), np.sin(phi)])


# =====================================================
# Catalog constructors
# =====================================================
def atomic(n, atoms, label="atomic"):
    return SpectralMeasure(n, tuple(atoms), None, label)


def axes(n, weight=1.0):
    """Σ_i (δ_{e_i} + δ_{-e_i}) with the given weight per atom."""
    atoms = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        atoms += [(tuple(e), weight), (tuple(-e), weight)]
    return SpectralMeasure(n, tuple(atoms), None, "axes")


def uniform(n, weight=1.0, angles=64):
    if n == 1:
        return SpectralMeasure(1, (), np.array([weight, weight]), "uniform")
    return SpectralMeasure(2, (), np.full(angles, float(weight)), "uniform")


def from_density(n, name, weight=1.0, angles=64):
    if name not in DENSITY_CATALOG:
        raise MeasureError(f"unknown density '{name}' (catalog: {', '.join(DENSITY_CATALOG)})")
    if n == 1:
        phi = np.array([0.0, np.pi])
    else:
        phi = density_angles(angles)
    return SpectralMeasure(n, (), weight * DENSITY_CATALOG[name](phi), f"density:{name}")


def empty(n):
    return SpectralMeasure(n, (), None, "none")


def atom_from_text(n, text):
    """
    Parse an atom line: `(angle_degrees, weight)` in 2D, `(sign, weight)` in 1D.
    """
    parts = [p.strip() for p in text.strip().strip("()").split(",")]
    if len(parts) != 2:
        raise ValueError(f"atom must look like (a, w), got '{text}'")
    first, weight = float(parts[0]), float(parts[1])
    if n == 1:
        if first not in (1.0, -1.0):
            raise ValueError(f"1D atom sign must be +1 or -1, got {parts[0]}")
        return Atom((first,), weight)
    angle = np.deg2rad(first)
    return Atom((float(np.cos(angle)), float(np.sin(angle))), weight)


def read_measure(path, n):
    """
    Measure spec file: `kind = atomic|density|uniform`, `atom = (a, w)` lines,
    `density = <catalog name>`, `weight = c`, `angles = M`.
    """
    issues, atoms, settings = [], [], {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            issues.append(ConfigIssue(lineno, line, "expected 'key = value'"))
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "atom":
            try:
                atoms.append(atom_from_text(n, value))
            except ValueError as e:
                issues.append(ConfigIssue(lineno, key, str(e)))
        elif key in ("kind", "density", "weight", "angles"):
            settings[key] = (lineno, value)
        else:
            issues.append(ConfigIssue(lineno, key, "unknown key"))
    if issues:
        raise ConfigError(issues)

    kind = settings.get("kind", (None, "atomic"))[1]
    weight = float(settings.get("weight", (None, "1"))[1])
    angles = int(settings.get("angles", (None, "64"))[1])
    if kind == "atomic":
        return atomic(n, atoms)
    if kind == "uniform":
        return uniform(n, weight, angles)
    if kind == "density":
        if "density" not in settings:
            raise ConfigError([ConfigIssue(None, "density", "density name required for kind = density")])
        return from_density(n, settings["density"][1], weight, angles)
    raise ConfigError([ConfigIssue(settings["kind"][0], "kind", f"unknown measure kind '{kind}'")])


# =====================================================
# validate / ellipticity
# =====================================================
def validate(m):
    """
    Check the SpectralMeasure invariants.

    Returns:
        list[str]: one message per violation, empty iff the measure is valid.
    """
    violations = []
    for i, (direction, weight) in enumerate(m.atoms):
        norm = float(np.linalg.norm(direction))
        if abs(norm - 1.0) > UNIT_TOLERANCE:
            violations.append(f"direction not unit: atom {i} {direction} has norm {norm:.15g}")
        if weight < 0:
            violations.append(f"negative weight: atom {i} {direction} has weight {weight}")
        if not np.isfinite(weight):
            violations.append(f"weight not finite: atom {i} {direction}")

    for i, (direction, weight) in enumerate(m.atoms):
        antipode = -np.asarray(direction)
        matched = any(
            np.allclose(other, antipode, atol=1e-9) and abs(w - weight) <= EVEN_TOLERANCE * max(1.0, abs(weight))
            for other, w in m.atoms
        )
        if not matched:
            violations.append(f"measure not even: atom {i} {direction} has no antipode with weight {weight}")

    if m.density is not None:
        density = m.density
        if np.any(density < 0):
            violations.append(f"negative weight: density sample {int(np.argmin(density))} is {density.min()}")
        if m.n == 1:
            if abs(density[0] - density[1]) > EVEN_TOLERANCE * max(1.0, abs(density[0])):
                violations.append(f"measure not even: density(+1)={density[0]} but density(-1)={density[1]}")
        elif density.size % 2:
            violations.append(f"measure not even: {density.size} angle samples have no antipodal pairing")
        else:
            half = density.size // 2
            gap = np.abs(density[:half] - density[half:])
            if np.any(gap > EVEN_TOLERANCE * max(1.0, float(np.abs(density).max()))):
                violations.append(f"measure not even: density differs at antipodal sample {int(np.argmax(gap))}")

    mass = m.total_mass
    if not np.isfinite(mass) or mass <= 0:
        violations.append(f"total mass not positive and finite: {mass}")
    return violations


@dataclass(frozen=True)
class EllipticityReport:
    lambda1_est: float
    lambda1_power2s_est: float
    total_mass: float
    sampled_directions: int
    grid_error_bound: float = 0.0
    directional_integrals: np.ndarray = field(default=None, repr=False, compare=False)

    def to_dict(self):
        return {
            "lambda1_est": self.lambda1_est,
            "lambda1_power2s_est": self.lambda1_power2s_est,
            "total_mass": self.total_mass,
            "sampled_directions": self.sampled_directions,
            "grid_error_bound": self.grid_error_bound,
        }


def ellipticity(m, s, n_dirs=720):
    """
    Minimum over equispaced directions ν of ∫|ν·θ| dμ and of ∫|ν·θ|^{2s} dμ.

    The directional integral is Lipschitz in ν with constant total_mass, so the
    sampled minimum overshoots the true infimum by at most total_mass·Δφ/2.
    """
    directions, weights = m.nodes()
    mass = float(weights.sum())
    if mass <= 0:
        raise MeasureError("empty measure")
    nu = sphere_directions(m.n, n_dirs)
    step = 0.0 if m.n == 1 else 2.0 * np.pi / n_dirs

    projections = np.abs(nu @ directions.T)
    power1 = projections @ weights
    power2s = (projections ** (2.0 * s)) @ weights
    report = EllipticityReport(
        lambda1_est=float(power1.min()),
        lambda1_power2s_est=float(power2s.min()),
        total_mass=mass,
        sampled_directions=len(nu),
        grid_error_bound=mass * step / 2.0,
        directional_integrals=power1,
    )
    logger.debug("Ellipticity: lambda1=%.6g (2s-variant %.6g), mass=%.6g", report.lambda1_est,
                 report.lambda1_power2s_est, mass)
    return report


# =====================================================
# OperatorSpec and the Fourier symbol
# =====================================================
@dataclass(frozen=True)
class OperatorSpec:
    s: float
    measure: SpectralMeasure
    inner_cut: float = 4.0
    tail_radius: float | None = None
    radial_points_per_decade: int = 0

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise OperatorError("s must lie in (0,1)")
        if not self.inner_cut > 0:
            raise OperatorError("inner_cut must be positive")
        if self.tail_radius is not None and not self.tail_radius > 0:
            raise OperatorError("tail_radius must be positive")
        if self.radial_points_per_decade < 0:
            raise OperatorError("radial_points_per_decade must be nonnegative")

    @property
    def n(self):
        return self.measure.n

    def describe(self):
        return {
            "s": self.s,
            "inner_cut": self.inner_cut,
            "tail_radius": self.tail_radius,
            "radial_points_per_decade": self.radial_points_per_decade,
            "measure": self.measure.describe(),
        }


def kernel_constant(s):
    """
    C_s = ∫_R (2 - 2cos t)|t|^{-1-2s} dt = 2Γ(1-2s)cos(πs)/s  (2π at s = 1/2).
    """
    if abs(s - 0.5) < 1e-9:
        return 2.0 * np.pi
    return float(2.0 * special.gamma(1.0 - 2.0 * s) * np.cos(np.pi * s) / s)


def symbol(spec, xi):
    """
    ½∫|ξ·θ|^{2s} dμ(θ), i.e. |ξ|^{2s} per unit antipodal atom pair.

    Args:
        xi: frequency vector, or an array of them with the last axis of size n.
    Returns:
        float or ndarray of symbol values.
    """
    directions, weights = spec.measure.nodes()
    xi = np.asarray(xi, dtype=float)
    if spec.n == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
        xi = xi[..., None]
    projections = np.abs(xi @ directions.T)
    values = 0.5 * (projections ** (2.0 * spec.s)) @ weights
    return float(values) if values.ndim == 0 else values


def multiplier(spec, xi):
    """Exact Fourier multiplier of the defining integral of L (nonpositive)."""
    return -2.0 * kernel_constant(spec.s) * symbol(spec, xi)
