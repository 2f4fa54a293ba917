import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import pandas as pd
from scipy import ndimage

from modules.errors import GridError, ValidationError

logger = logging.getLogger(__name__)

OMEGA_KINDS = ("ball", "box")
AXIS_LABELS = ("x", "y")


# =====================================================
# GridDomain: uniform grid on [-b, b]^n with Ω mask
# =====================================================
@dataclass(frozen=True)
class GridDomain:
    """
    Uniform grid on the box [-box_halfwidth, box_halfwidth]^n.

    Ω is a ball or a box of radius omega_radius around omega_center and must
    sit strictly inside the grid box; everything outside the box carries the
    exterior value of the field that lives on the grid.
    """
    n: int
    box_halfwidth: float
    points_per_axis: int
    omega_kind: str = "ball"
    omega_radius: float = 1.0
    omega_center: tuple = field(default=())

    def __post_init__(self):
        if self.n not in (1, 2):
            raise GridError(f"dimension must be 1 or 2, got {self.n}")
        if self.points_per_axis < 3:
            raise GridError("points_per_axis must be at least 3")
        if not self.box_halfwidth > 0:
            raise GridError("box_halfwidth must be positive")
        if self.omega_kind not in OMEGA_KINDS:
            raise GridError(f"unknown domain kind '{self.omega_kind}' (expected one of {OMEGA_KINDS})")
        if not self.omega_radius > 0:
            raise GridError("domain radius must be positive")

        center = tuple(float(c) for c in self.omega_center) or (0.0,) * self.n
        if len(center) != self.n:
            raise GridError(f"domain center needs {self.n} coordinates, got {len(center)}")
        object.__setattr__(self, "omega_center", center)

        # Ω ⊂ interior of the box
        reach = max(abs(c) for c in center) + self.omega_radius
        if reach >= self.box_halfwidth:
            raise GridError(
                f"domain (center {center}, radius {self.omega_radius}) does not fit inside "
                f"the box of halfwidth {self.box_halfwidth}"
            )
        if not self.omega_mask.any():
            raise GridError("domain contains no grid points; refine the grid")

    # --- derived geometry ---
    @property
    def h(self):
        return 2.0 * self.box_halfwidth / (self.points_per_axis - 1)

    @property
    def shape(self):
        return (self.points_per_axis,) * self.n

    @property
    def size(self):
        return self.points_per_axis ** self.n

    @cached_property
    def axis(self):
        return np.linspace(-self.box_halfwidth, self.box_halfwidth, self.points_per_axis)

    @cached_property
    def coordinates(self):
        """Tuple of coordinate arrays (ij indexing), one per axis."""
        return tuple(np.meshgrid(*([self.axis] * self.n), indexing="ij"))

    @cached_property
    def boundary_distance(self):
        """d(x) = dist(x, ∂Ω) on Ω, zero elsewhere."""
        offsets = [c - x0 for c, x0 in zip(self.coordinates, self.omega_center)]
        if self.omega_kind == "ball":
            radius = np.sqrt(sum(o ** 2 for o in offsets))
            distance = self.omega_radius - radius
        else:
            distance = np.min([self.omega_radius - np.abs(o) for o in offsets], axis=0)
        return np.clip(distance, 0.0, None)

    @cached_property
    def omega_mask(self):
        return self.boundary_distance > 0

    @cached_property
    def omega_indices(self):
        """Flat (C-order) indices of the Ω points."""
        return np.flatnonzero(self.omega_mask)

    @property
    def omega_diameter(self):
        if self.omega_kind == "ball":
            return 2.0 * self.omega_radius
        return 2.0 * self.omega_radius * np.sqrt(self.n)

    @property
    def box_diameter(self):
        return 2.0 * self.box_halfwidth * np.sqrt(self.n)

    def position(self, index):
        """Physical coordinates of a grid index tuple."""
        index = self.check_index(index)
        return np.array([self.axis[i] for i in index])

    def check_index(self, index):
        index = tuple(int(i) for i in np.atleast_1d(index))
        if len(index) != self.n:
            raise GridError(f"grid point needs {self.n} indices, got {len(index)}")
        if any(i < 0 or i >= self.points_per_axis for i in index):
            raise GridError(f"grid point {index} lies outside the grid")
        return index

    def locate(self, point):
        """Index of the grid node at physical coordinates `point`."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        raw = (point + self.box_halfwidth) / self.h
        index = np.rint(raw)
        if np.any(np.abs(raw - index) > 1e-6):
            raise GridError(f"point {tuple(point)} is not a grid node")
        return self.check_index(index.astype(int))

    def refine(self, factor=2):
        """Same box and Ω with h divided by `factor`."""
        return GridDomain(
            self.n, self.box_halfwidth, (self.points_per_axis - 1) * factor + 1,
            self.omega_kind, self.omega_radius, self.omega_center,
        )

    def describe(self):
        return {
            "dimension": self.n,
            "box_halfwidth": self.box_halfwidth,
            "points_per_axis": self.points_per_axis,
            "h": self.h,
            "domain_kind": self.omega_kind,
            "domain_radius": self.omega_radius,
            "domain_center": list(self.omega_center),
            "omega_points": int(self.omega_mask.sum()),
        }


def centered_box(n, halfwidth, points_per_axis):
    """Grid whose Ω is (almost) the whole box; used for kernels and transforms."""
    return GridDomain(n, halfwidth, points_per_axis, "box", halfwidth * (1.0 - 1e-9))


# =====================================================
# Field: grid samples + exterior value
# =====================================================
@dataclass
class Field:
    grid: GridDomain
    values: np.ndarray
    exterior_value: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size == self.grid.size and values.shape != self.grid.shape:
            values = values.reshape(self.grid.shape)
        if values.shape != self.grid.shape:
            raise ValidationError(f"field shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("field values must be finite")
        self.values = values
        self.exterior_value = float(self.exterior_value)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid, fn, exterior_value=0.0):
        """fn receives one coordinate array per axis."""
        return cls(grid, np.broadcast_to(fn(*grid.coordinates), grid.shape).copy(), exterior_value)

    def with_values(self, values):
        return Field(self.grid, values, self.exterior_value)

    def restricted_to_omega(self):
        """Zero outside Ω, exterior value 0 (Dirichlet data)."""
        return Field(self.grid, np.where(self.grid.omega_mask, self.values, 0.0), 0.0)

    def value_at(self, index):
        return float(self.values[self.grid.check_index(index)])

    def evaluate(self, points):
        """
        Multilinear interpolation at physical points (shape (..., n)).
        Points off the box read the exterior value.
        """
        points = np.asarray(points, dtype=float)
        if self.grid.n == 1 and (points.ndim == 0 or points.shape[-1] != 1):
            points = points[..., None]
        return self.sample((points + self.grid.box_halfwidth) / self.grid.h)

    def sample(self, coords):
        """
        Multilinear interpolation at fractional index coordinates (shape (..., n)).
        """
        coords = np.asarray(coords, dtype=float)
        # Snap to nodes so that on-grid evaluation is exact
        nearest = np.rint(coords)
        coords = np.where(np.abs(coords - nearest) < 1e-9, nearest, coords)
        flat = coords.reshape(-1, self.grid.n).T
        sampled = ndimage.map_coordinates(
            self.values, flat, order=1, mode="grid-constant", cval=self.exterior_value, prefilter=False
        )
        return sampled.reshape(coords.shape[:-1])

    def sup_norm(self, mask=None):
        values = self.values if mask is None else self.values[mask]
        return float(np.max(np.abs(values))) if values.size else 0.0

    def oscillation(self, mask=None):
        values = self.values if mask is None else self.values[mask]
        return float(values.max() - values.min()) if values.size else 0.0

    def to_frame(self):
        columns = {AXIS_LABELS[i]: c.ravel() for i, c in enumerate(self.grid.coordinates)}
        columns["value"] = self.values.ravel()
        return pd.DataFrame(columns)


# =====================================================
# CSV I/O
# =====================================================
def write_field_csv(u, path):
    u.to_frame().to_csv(path, index=False, float_format="%.17g")
    logger.debug("Wrote field %s to %s", u.grid.shape, path)


def read_field_csv(path, grid, exterior_value=0.0):
    """
    Read a `x[,y],value` CSV written by write_field_csv back onto `grid`.
    """
    df = pd.read_csv(path, float_precision="round_trip")
    expected = list(AXIS_LABELS[:grid.n]) + ["value"]
    if list(df.columns) != expected:
        raise ValidationError(f"field CSV header must be {','.join(expected)}, got {','.join(df.columns)}")
    if len(df) != grid.size:
        raise ValidationError(f"field CSV has {len(df)} rows, grid needs {grid.size}")
    for i, label in enumerate(AXIS_LABELS[:grid.n]):
        if not np.allclose(df[label].to_numpy(), grid.coordinates[i].ravel(), atol=1e-9 * grid.box_halfwidth):
            raise ValidationError(f"field CSV coordinates in column '{label}' do not match the grid")
    return Field(grid, df["value"].to_numpy(), exterior_value)
