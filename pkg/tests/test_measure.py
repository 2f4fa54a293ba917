import numpy as np
import pytest

from modules import measure as measures
from modules.errors import ConfigError, MeasureError, OperatorError


def test_uniform_1d_is_unit_pair():
    m = measures.uniform(1)
    directions, weights = m.nodes()
    assert directions.ravel().tolist() == [1.0, -1.0]
    assert m.total_mass == pytest.approx(2.0)
    assert measures.validate(m) == []


def test_catalog_measures_are_valid():
    catalog = [measures.axes(2), measures.uniform(2, angles=32)]
    catalog += [measures.from_density(2, name) for name in measures.DENSITY_CATALOG]
    for m in catalog:
        assert measures.validate(m) == [], m.label


def test_validate_reports_every_violation():
    m = measures.atomic(2, [((1.0, 0.0), 1.0), ((0.6, 0.6), 1.0), ((0.0, 1.0), -1.0)])
    violations = measures.validate(m)
    assert any(v.startswith("direction not unit") for v in violations)
    assert any(v.startswith("negative weight") for v in violations)
    assert any(v.startswith("measure not even") for v in violations)


def test_uneven_1d_density_is_rejected():
    m = measures.SpectralMeasure(1, (), np.array([1.0, 2.0]))
    assert any("not even" in v for v in measures.validate(m))


def test_wrong_dimension_atom():
    with pytest.raises(MeasureError):
        measures.SpectralMeasure(2, (((1.0,), 1.0),))


def test_atom_from_text():
    atom = measures.atom_from_text(1, "(-1, 2.5)")
    assert atom.direction == (-1.0,)
    assert atom.weight == 2.5
    atom = measures.atom_from_text(2, "(90, 1)")
    np.testing.assert_allclose(atom.direction, (0.0, 1.0), atol=1e-15)
    with pytest.raises(ValueError):
        measures.atom_from_text(1, "(0.5, 1)")


def test_read_measure(tmp_path):
    path = tmp_path / "axes.measure"
    path.write_text("kind = atomic\natom = (0, 1)\natom = (180, 1)\n", encoding="utf-8")
    m = measures.read_measure(path, 2)
    assert len(m.atoms) == 2
    assert measures.validate(m) == []

    path.write_text("kind = atomic\ncolour = blue\n", encoding="utf-8")
    with pytest.raises(ConfigError) as excinfo:
        measures.read_measure(path, 2)
    assert excinfo.value.issues[0].line == 2


def test_ellipticity_axes():
    report = measures.ellipticity(measures.axes(2), 0.5)
    # ∫|ν·θ| dμ = 2(|cos φ| + |sin φ|), smallest on the axes
    assert report.lambda1_est == pytest.approx(2.0)
    assert report.lambda1_power2s_est == pytest.approx(2.0)
    assert report.total_mass == pytest.approx(4.0)


def test_ellipticity_degenerate_direction():
    # a single pair along e_1 does not control the e_2 direction
    m = measures.atomic(2, [((1.0, 0.0), 1.0), ((-1.0, 0.0), 1.0)])
    assert measures.ellipticity(m, 0.5).lambda1_est == pytest.approx(0.0, abs=1e-12)


def test_kernel_constant():
    assert measures.kernel_constant(0.5) == pytest.approx(2.0 * np.pi)
    assert measures.kernel_constant(0.5 + 1e-6) == pytest.approx(2.0 * np.pi, rel=1e-4)
    assert measures.kernel_constant(0.25) > 0


def test_symbol_homogeneous_even_and_zero_at_origin(axes_spec):
    rng = np.random.default_rng(3)
    xi = rng.normal(size=(50, 2))
    t = 3.7
    base = measures.symbol(axes_spec, xi)
    np.testing.assert_allclose(measures.symbol(axes_spec, t * xi), t ** (2 * axes_spec.s) * base, rtol=1e-12)
    np.testing.assert_allclose(measures.symbol(axes_spec, -xi), base, rtol=1e-14)
    assert measures.symbol(axes_spec, np.zeros(2)) == 0.0


def test_unit_pair_symbol_is_power(uniform_spec):
    xi = np.array([0.5, 2.0, 7.0])
    np.testing.assert_allclose(measures.symbol(uniform_spec, xi), np.abs(xi) ** (2 * uniform_spec.s))
    assert np.all(measures.multiplier(uniform_spec, xi) < 0)


def test_operator_spec_rejects_bad_order():
    with pytest.raises(OperatorError, match=r"s must lie in \(0,1\)"):
        measures.OperatorSpec(1.2, measures.uniform(1))
