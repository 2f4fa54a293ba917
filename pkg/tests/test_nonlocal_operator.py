import numpy as np
import pytest

from modules import measure as measures
from modules.errors import OperatorError, StencilTooLargeError
from modules.grid import Field, GridDomain
from modules.nonlocal_operator import (
    apply_fft,
    apply_L,
    apply_L_points,
    apply_stencil,
    assemble_stencil,
    bilinear_energy,
    folded_directions,
    lattice_vector,
    quadrature_nodes,
    radial_rule,
    second_difference,
)


def gaussian(grid, sigma=0.25):
    return Field.from_function(grid, lambda *c: np.exp(-sum(x ** 2 for x in c) / (2 * sigma ** 2)))


def test_radial_rule_integrates_the_kernel():
    s = 0.3
    nodes, weights, end = radial_rule(0.4, 5.0, 0.1, s)
    assert end >= 5.0 - 1e-9
    assert np.all(np.diff(nodes) > 0)
    exact = (0.4 ** (-2 * s) - end ** (-2 * s)) / (2 * s)
    assert weights.sum() == pytest.approx(exact, rel=1e-10)
    # quadratic g is reproduced by the product rule
    g = nodes ** 2
    exact_g = (end ** (2 - 2 * s) - 0.4 ** (2 - 2 * s)) / (2 - 2 * s)
    assert weights @ g == pytest.approx(exact_g, rel=1e-10)


def test_graded_radial_rule_reaches_the_tail():
    nodes, weights, end = radial_rule(0.4, 50.0, 0.1, 0.5, points_per_decade=8)
    assert end >= 50.0 - 1e-9
    assert len(nodes) < 500
    assert np.all(weights > 0)


def test_lattice_vector():
    assert lattice_vector((1.0 / np.sqrt(2), 1.0 / np.sqrt(2))) == (1, 1)
    assert lattice_vector((-1.0, 0.0)) == (1, 0)
    assert lattice_vector((np.cos(0.3), np.sin(0.3))) is None


def test_folded_directions_combine_antipodes():
    folded = folded_directions(measures.uniform(1, weight=1.5))
    assert len(folded) == 1
    assert folded[0][1] == pytest.approx(3.0)
    assert len(folded_directions(measures.axes(2))) == 2


def test_quadrature_nodes_dimension_mismatch(grid_2d, uniform_spec):
    with pytest.raises(OperatorError):
        quadrature_nodes(uniform_spec, grid_2d)


def test_constants_are_annihilated(grid_1d, uniform_spec):
    u = Field(grid_1d, np.full(grid_1d.shape, 2.5), exterior_value=2.5)
    assert apply_L(uniform_spec, u, grid_1d.locate(0.0)) == pytest.approx(0.0, abs=1e-10)
    assert apply_L(uniform_spec, u, (0,)) == pytest.approx(0.0, abs=1e-10)


def test_nonpositive_at_a_maximum(grid_1d, uniform_spec):
    u = gaussian(grid_1d)
    assert apply_L(uniform_spec, u, grid_1d.locate(0.0)) < 0


def test_second_difference_of_quadratic(grid_1d):
    u = Field.from_function(grid_1d, lambda x: x ** 2)
    assert second_difference(u, grid_1d.locate(0.5), [0.25]) == pytest.approx(2 * 0.25 ** 2)


def test_quadrature_matches_fourier_multiplier():
    grid = GridDomain(1, 2.0, 513)
    spec = measures.OperatorSpec(0.5, measures.uniform(1))
    u = gaussian(grid)
    samples = [[i] for i in range(192, 321, 16)]
    quadrature = apply_L_points(spec, u, samples)
    spectral = apply_fft(spec, u, padding=256).values[np.asarray(samples).ravel()]
    scale = np.max(np.abs(spectral))
    np.testing.assert_allclose(quadrature, spectral, atol=1e-3 * scale)


def test_stencil_structure(grid_1d, uniform_spec):
    stencil = assemble_stencil(uniform_spec, grid_1d)
    assert np.all(stencil.weights >= 0)
    assert stencil.diagonal == pytest.approx(-(stencil.weights.sum() + stencil.tail_coefficient), rel=1e-12)
    frame = stencil.to_frame()
    assert list(frame.columns) == ["offset_i", "weight"]
    assert frame["weight"].iloc[0] == stencil.diagonal


def test_stencil_agrees_with_pointwise_quadrature(grid_1d, uniform_spec):
    u = gaussian(grid_1d)
    stencil = assemble_stencil(uniform_spec, grid_1d)
    applied = apply_stencil(stencil, u)
    for index in (40, 64, 90):
        assert applied.values[index] == pytest.approx(apply_L(uniform_spec, u, (index,)), rel=1e-8, abs=1e-10)


def test_stencil_2d_axes(grid_2d, axes_spec):
    u = gaussian(grid_2d, 0.3)
    stencil = assemble_stencil(axes_spec, grid_2d)
    # axis measures only couple points on the same row or column
    assert np.all((stencil.offsets == 0).any(axis=1))
    centre = grid_2d.locate((0.0, 0.0))
    assert apply_stencil(stencil, u).values[centre] == pytest.approx(apply_L(axes_spec, u, centre), rel=1e-8)


def test_stencil_cap(grid_1d, uniform_spec):
    with pytest.raises(StencilTooLargeError, match="grid too large for dense stencil"):
        assemble_stencil(uniform_spec, grid_1d, max_points=64)


def test_bilinear_energy_is_positive_and_matches_stencil(grid_1d, uniform_spec):
    u = gaussian(grid_1d).restricted_to_omega()
    v = Field.from_function(grid_1d, lambda x: np.cos(x)).restricted_to_omega()
    stencil = assemble_stencil(uniform_spec, grid_1d)
    assert bilinear_energy(uniform_spec, u, u, stencil) > 0
    expected = -np.sum(v.values * apply_stencil(stencil, u).values) * grid_1d.h
    assert bilinear_energy(uniform_spec, u, v, stencil) == pytest.approx(expected, rel=1e-8)


def test_isotropic_symbol_is_rotation_invariant():
    spec = measures.OperatorSpec(0.5, measures.uniform(2))
    psi = np.linspace(0.0, 2.0 * np.pi, 37)
    values = measures.symbol(spec, 3.0 * np.column_stack([np.cos(psi), np.sin(psi)]))
    assert np.ptp(values) <= 1e-2 * values.mean()
    # quarter turns permute the 64 equispaced atoms
    u = gaussian(GridDomain(2, 2.0, 33))
    out = apply_fft(spec, u).values
    np.testing.assert_allclose(np.rot90(out), out, atol=1e-9 * np.max(np.abs(out)))
