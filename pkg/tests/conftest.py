import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from modules import measure as measures
from modules.grid import Field, GridDomain
from modules.local_operator import make_coefficient
from modules.solve import MixedProblem


@pytest.fixture
def grid_1d():
    return GridDomain(1, 2.0, 129)


@pytest.fixture
def grid_2d():
    return GridDomain(2, 2.0, 33)


@pytest.fixture
def uniform_spec():
    return measures.OperatorSpec(0.5, measures.uniform(1))


@pytest.fixture
def axes_spec():
    return measures.OperatorSpec(0.5, measures.axes(2))


@pytest.fixture
def mixed_problem(grid_1d, uniform_spec):
    unit = make_coefficient("constant", 0.5, 1.0, 1.0, grid_1d)
    f = Field(grid_1d, grid_1d.omega_mask.astype(float))
    return MixedProblem(uniform_spec, unit, grid_1d, f)


@pytest.fixture
def write_config(tmp_path):
    """Write `key = value` lines to a config file and return its path."""

    def write(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
