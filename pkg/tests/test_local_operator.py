import numpy as np
import pytest

from modules.errors import CoefficientError, GridError
from modules.grid import Field, GridDomain
from modules.local_operator import (
    CoefficientField,
    apply_div_a_grad,
    assemble_div_a_grad,
    dirichlet_energy,
    make_coefficient,
    weierstrass_profile,
)


@pytest.mark.parametrize("kind", ["constant", "smooth-sine", "weierstrass-alpha"])
def test_catalog_respects_bounds(grid_2d, kind):
    a = make_coefficient(kind, 0.4, 0.5, 2.0, grid_2d, seed=1)
    assert a.samples.values.min() >= 0.5
    assert a.samples.values.max() <= 2.0
    assert np.isfinite(a.holder_ratio)


def test_constant_value(grid_1d):
    assert make_coefficient("constant", 0.5, 2.0, 2.0, grid_1d).constant_value == pytest.approx(2.0)
    assert make_coefficient("smooth-sine", 0.5, 1.0, 2.0, grid_1d).constant_value is None


def test_coefficient_validation(grid_1d):
    with pytest.raises(CoefficientError):
        make_coefficient("constant", 1.5, 1.0, 1.0, grid_1d)
    with pytest.raises(CoefficientError):
        make_coefficient("constant", 0.5, 2.0, 1.0, grid_1d)
    with pytest.raises(CoefficientError):
        make_coefficient("checkerboard", 0.5, 1.0, 1.0, grid_1d)
    with pytest.raises(CoefficientError):
        CoefficientField(Field(grid_1d, np.full(grid_1d.shape, 3.0)), 0.5, 1.0, 2.0)


def test_weierstrass_profile_is_normalised_and_seeded(grid_1d):
    first = weierstrass_profile(grid_1d, 0.3, seed=4)
    assert first.min() == pytest.approx(0.0)
    assert first.max() == pytest.approx(1.0)
    np.testing.assert_array_equal(first, weierstrass_profile(grid_1d, 0.3, seed=4))
    assert not np.array_equal(first, weierstrass_profile(grid_1d, 0.3, seed=5))


def test_flux_form_on_a_quadratic():
    grid = GridDomain(1, 2.0, 9)
    a = make_coefficient("constant", 0.5, 1.0, 1.0, grid)
    u = Field.from_function(grid, lambda x: x ** 2)
    assert apply_div_a_grad(a, u, grid.locate(0.0)) == pytest.approx(2.0)
    assert apply_div_a_grad(a, u, grid.locate(0.5)) == pytest.approx(2.0)


def test_matrix_matches_pointwise(grid_2d):
    a = make_coefficient("smooth-sine", 0.5, 0.5, 1.5, grid_2d)
    u = Field.from_function(grid_2d, lambda x, y: np.exp(-x ** 2 - 2 * y ** 2))
    matrix = assemble_div_a_grad(a, grid_2d)
    applied = (matrix @ u.values.ravel()).reshape(grid_2d.shape)
    for index in [(16, 16), (5, 20), (0, 7), (32, 32)]:
        assert applied[index] == pytest.approx(apply_div_a_grad(a, u, index), rel=1e-12, abs=1e-12)


def test_matrix_signs(grid_2d):
    a = make_coefficient("weierstrass-alpha", 0.5, 1.0, 3.0, grid_2d)
    matrix = assemble_div_a_grad(a, grid_2d)
    assert abs(matrix - matrix.T).max() == 0
    off = matrix.copy()
    off.setdiag(0)
    assert off.min() >= 0
    assert matrix.diagonal().max() < 0
    # Dirichlet beyond the box: strictly diagonally dominant on the edge rows only
    row_sums = np.asarray(matrix.sum(axis=1)).ravel().reshape(grid_2d.shape)
    assert row_sums[16, 16] == pytest.approx(0.0, abs=1e-9)
    assert row_sums[0, 16] < 0


def test_grid_mismatch(grid_1d):
    a = make_coefficient("constant", 0.5, 1.0, 1.0, grid_1d)
    with pytest.raises(GridError):
        assemble_div_a_grad(a, grid_1d.refine())


def test_dirichlet_energy_of_sine():
    grid = GridDomain(1, 2.0, 257, "box", 1.0)
    a = make_coefficient("constant", 0.5, 1.0, 1.0, grid)
    # sin(π(x+1)/2) on Ω = (-1, 1): ∫ u'² = π²/4
    u = Field.from_function(grid, lambda x: np.sin(0.5 * np.pi * (x + 1.0))).restricted_to_omega()
    assert dirichlet_energy(a, u) == pytest.approx(np.pi ** 2 / 4, rel=1e-3)
