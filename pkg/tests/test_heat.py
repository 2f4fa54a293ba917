import numpy as np
import pytest
from scipy import special

from modules import measure as measures
from modules.errors import UnderResolvedError, ValidationError
from modules.grid import Field, GridDomain
from modules.heat import (
    MixedSymbol,
    gaussian_kernel,
    harmonic_field,
    kernel,
    kernel_grid,
    kernel_moments,
    lipschitz_seminorm,
    mixed_symbol,
    moment_check,
    oscillation_contraction,
    refinement_study,
    semigroup_defect,
    smooth,
    smoothing_invariance,
    symbol_bounds,
)


@pytest.fixture
def small_grid():
    return GridDomain(1, 2.0, 65)


def test_kernel_grid_keeps_spacing(small_grid):
    big = kernel_grid(small_grid, 4)
    assert big.h == pytest.approx(small_grid.h)
    assert big.points_per_axis % 2 == 1
    assert big.axis[big.points_per_axis // 2] == pytest.approx(0.0, abs=1e-12)


def test_symbol_requires_some_operator(small_grid):
    with pytest.raises(ValidationError):
        mixed_symbol(None, 0.0, small_grid)
    with pytest.raises(ValidationError):
        mixed_symbol(None, -1.0, small_grid)


def test_local_kernel_is_the_gaussian(small_grid):
    grid = kernel_grid(small_grid)
    k = kernel(mixed_symbol(None, 1.0, grid), 1.0)
    # periodic images only matter near the box edge
    inner = np.abs(grid.axis) <= 4.0
    np.testing.assert_allclose(k.values.values[inner], gaussian_kernel(grid, 1.0, 1.0)[inner], atol=1e-10)
    assert k.mass == pytest.approx(1.0, rel=1e-12)


def test_mixed_kernel_mass_and_moment(small_grid, uniform_spec):
    grid = kernel_grid(small_grid)
    k = kernel(mixed_symbol(uniform_spec, 1.0, grid), 1.0, delta=0.25)
    assert k.mass == pytest.approx(1.0, rel=1e-10)
    assert np.isfinite(k.moment)
    assert k.moment > 1.0
    assert k.values.values.max() == k.values.value_at((grid.points_per_axis // 2,))
    assert lipschitz_seminorm(k) > 0


def test_moment_check_rejects_bad_delta(small_grid, uniform_spec):
    k = kernel(mixed_symbol(uniform_spec, 1.0, kernel_grid(small_grid)), 1.0)
    with pytest.raises(ValidationError):
        moment_check(k, 0.5, 1.5)


def test_under_resolved_kernel():
    grid = GridDomain(1, 2.0, 17)
    spec = measures.OperatorSpec(0.25, measures.uniform(1))
    with pytest.raises(UnderResolvedError, match="under-resolved"):
        kernel(mixed_symbol(spec, 0.0, grid), 1e-3)


@pytest.mark.parametrize("a_const", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_symbol_bounds_sandwich(small_grid, s, a_const):
    spec = measures.OperatorSpec(s, measures.uniform(1))
    symbol = mixed_symbol(spec, a_const, kernel_grid(small_grid))
    low, high = symbol_bounds(symbol)
    assert 0 < low <= high
    # c|ξ|^{2s} + a|ξ|² meets both envelopes only at |ξ| = 1
    at_one = a_const + 2.0 * measures.kernel_constant(s) * measures.symbol(spec, np.array([1.0]))
    assert low == pytest.approx(at_one, rel=1e-12)
    assert high == pytest.approx(at_one, rel=1e-12)


def test_symbol_bounds_sandwich_2d(grid_2d, axes_spec):
    symbol = mixed_symbol(axes_spec, 1.0, grid_2d)
    low, high = symbol_bounds(symbol)
    assert 0 < low <= high
    xi = symbol.frequencies.reshape(-1, 2)
    radius = np.sqrt(np.sum(xi ** 2, axis=-1))
    keep = radius > 0
    values = symbol.values.ravel()[keep]
    r = radius[keep]
    assert np.all(values >= low * np.minimum(r, r ** 2) * (1 - 1e-12))
    assert np.all(values <= high * np.maximum(r, r ** 2) * (1 + 1e-12))


def test_semigroup(small_grid, uniform_spec):
    symbol = mixed_symbol(uniform_spec, 1.0, kernel_grid(small_grid))
    assert semigroup_defect(symbol, 0.5, 0.5) <= 1e-10


def test_refinement_study(small_grid, uniform_spec):
    study = refinement_study(uniform_spec, 1.0, small_grid, t=1.0, delta=0.25)
    assert study["moment_stable"]
    assert study["lipschitz_stable"]


def test_affine_fields_are_invariant(small_grid, uniform_spec):
    grid = kernel_grid(small_grid)
    symbol = mixed_symbol(uniform_spec, 1.0, grid)
    assert smoothing_invariance(symbol, Field(grid, np.full(grid.shape, 3.0))) <= 1e-10
    affine = Field.from_function(grid, lambda x: 2.0 * x - 1.0)
    assert smoothing_invariance(symbol, affine) <= 1e-9


def test_non_harmonic_control_moves(small_grid, uniform_spec):
    grid = kernel_grid(small_grid)
    symbol = mixed_symbol(uniform_spec, 1.0, grid)
    control = Field.from_function(grid, lambda x: np.cos(3 * x) * np.exp(-x ** 2))
    assert smoothing_invariance(symbol, control) > 0.1
    before, after = oscillation_contraction(symbol, control)
    assert after < before


def test_harmonic_field_keeps_exterior_data(uniform_spec):
    grid = GridDomain(1, 4.0, 129)
    v = harmonic_field(uniform_spec, 1.0, grid)
    outside = ~grid.omega_mask
    assert np.all(np.isfinite(v.values))
    # bounded by the data (maximum principle)
    assert v.sup_norm(grid.omega_mask) <= v.sup_norm(outside) + 1e-8


def test_gaussian_second_moment_and_lipschitz(small_grid):
    grid = kernel_grid(small_grid)
    k = kernel(mixed_symbol(None, 1.0, grid), 1.0, delta=0.5)
    variance = 2.0
    second = float(np.sum(grid.axis ** 2 * k.values.values)) * grid.h
    assert second == pytest.approx(variance, rel=1e-2)
    # E|X|^p of N(0, σ²) with p = 2 - δ
    p = 1.5
    absolute = variance ** (p / 2) * 2 ** (p / 2) * special.gamma((p + 1) / 2) / np.sqrt(np.pi)
    assert k.moment == pytest.approx(1.0 + absolute, rel=1e-2)
    steepest = np.exp(-0.5) / (variance * np.sqrt(2 * np.pi))
    assert lipschitz_seminorm(k) == pytest.approx(steepest, rel=2e-2)


def test_kernel_moments_are_unit_and_centred(small_grid, uniform_spec):
    k = kernel(mixed_symbol(uniform_spec, 1.0, kernel_grid(small_grid)), 1.0)
    mass, first = kernel_moments(k)
    assert mass == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(first)) <= 1e-12


def test_damped_kernel_does_not_fix_constants(small_grid, uniform_spec):
    grid = kernel_grid(small_grid)
    symbol = mixed_symbol(uniform_spec, 1.0, grid)
    damped = MixedSymbol(uniform_spec, 1.0, grid, symbol.values + 5.0)
    constant = Field(grid, np.full(grid.shape, 3.0))
    assert smoothing_invariance(damped, constant) == pytest.approx(3.0 * (1.0 - np.exp(-5.0)), rel=1e-9)
    affine = Field.from_function(grid, lambda x: 2.0 * x - 1.0)
    assert smoothing_invariance(damped, affine) > 1.0


def test_harmonic_field_obeys_the_averaging_bound(uniform_spec):
    grid = GridDomain(1, 4.0, 129)
    v = harmonic_field(uniform_spec, 1.0, grid)
    result = smooth(mixed_symbol(uniform_spec, 1.0, grid), v)
    inner = np.abs(grid.axis) <= 1.0
    defect = result.defect(inner)
    assert 0 < defect <= result.averaging_bound(inner) + 1e-10 * (v.sup_norm() + 1.0)
    assert result.kernel_l1 == pytest.approx(1.0, abs=1e-8)
