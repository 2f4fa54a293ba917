import numpy as np
import pytest

from modules.errors import GridError, ValidationError
from modules.grid import Field, GridDomain, read_field_csv, write_field_csv


def test_grid_geometry():
    grid = GridDomain(1, 2.0, 5)
    assert grid.h == pytest.approx(1.0)
    np.testing.assert_allclose(grid.axis, [-2.0, -1.0, 0.0, 1.0, 2.0])
    # only x = 0 lies strictly inside the unit ball
    assert grid.omega_mask.tolist() == [False, False, True, False, False]
    assert grid.omega_indices.tolist() == [2]


def test_domain_must_fit_inside_box():
    with pytest.raises(GridError):
        GridDomain(1, 1.0, 33)
    with pytest.raises(GridError):
        GridDomain(2, 2.0, 33, omega_center=(1.5, 0.0))


def test_box_domain_distance():
    grid = GridDomain(2, 2.0, 9, "box", 1.0)
    centre = grid.locate((0.0, 0.0))
    assert grid.boundary_distance[centre] == pytest.approx(1.0)
    assert grid.boundary_distance[grid.locate((0.5, -0.5))] == pytest.approx(0.5)
    assert grid.omega_diameter == pytest.approx(2.0 * np.sqrt(2.0))


def test_locate_and_position(grid_2d):
    index = grid_2d.locate((0.5, -1.0))
    np.testing.assert_allclose(grid_2d.position(index), (0.5, -1.0))
    with pytest.raises(GridError):
        grid_2d.locate((0.01, 0.0))
    with pytest.raises(GridError):
        grid_2d.check_index((0, 99))


def test_refine_keeps_box_and_domain(grid_1d):
    fine = grid_1d.refine()
    assert fine.points_per_axis == 257
    assert fine.h == pytest.approx(grid_1d.h / 2)
    assert fine.omega_radius == grid_1d.omega_radius


def test_field_evaluate_interpolates_and_reads_exterior(grid_1d):
    u = Field.from_function(grid_1d, lambda x: 3.0 * x + 1.0, exterior_value=-7.0)
    assert u.evaluate(0.25) == pytest.approx(1.75)
    assert u.evaluate(0.25 + grid_1d.h / 3) == pytest.approx(1.75 + grid_1d.h)
    assert u.evaluate(5.0) == pytest.approx(-7.0)


def test_field_rejects_bad_values(grid_1d):
    with pytest.raises(ValidationError):
        Field(grid_1d, np.zeros(7))
    values = np.zeros(grid_1d.shape)
    values[3] = np.nan
    with pytest.raises(ValidationError):
        Field(grid_1d, values)


def test_restricted_to_omega(grid_1d):
    u = Field(grid_1d, np.ones(grid_1d.shape), 2.0).restricted_to_omega()
    assert u.exterior_value == 0.0
    assert u.values.sum() == grid_1d.omega_mask.sum()


def test_field_csv(tmp_path, grid_2d):
    u = Field.from_function(grid_2d, lambda x, y: np.sin(x) * np.cos(y))
    path = tmp_path / "u.csv"
    write_field_csv(u, path)
    assert path.read_text().splitlines()[0] == "x,y,value"
    back = read_field_csv(path, grid_2d)
    np.testing.assert_array_equal(back.values, u.values)

    with pytest.raises(ValidationError):
        read_field_csv(path, GridDomain(2, 2.0, 17))


def test_field_csv_is_bit_exact(tmp_path, grid_1d):
    u = Field(grid_1d, np.pi / 3.0 + np.exp(grid_1d.axis) / 7.0)
    path = tmp_path / "u.csv"
    write_field_csv(u, path)
    back = read_field_csv(path, grid_1d)
    assert np.array_equal(back.values, u.values)
