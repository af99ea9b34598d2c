import numpy as np
import pytest

from run_config import bump_profile
from spectral_core import Field, make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid_64():
    return make_grid(64, 2.0 * np.pi)


@pytest.fixture
def wave_grid():
    """Reference grid for short nonlinear runs"""
    return make_grid(256, 50.0)


@pytest.fixture
def gaussian(wave_grid):
    return Field(wave_grid, np.exp(-(wave_grid.points / 2.0) ** 2))


@pytest.fixture
def bump_grid():
    return make_grid(1024, 20.0)


@pytest.fixture
def bump(bump_grid):
    """Nonnegative smooth bump supported in [-1, 1]"""
    return Field(bump_grid, bump_profile(bump_grid.points))


@pytest.fixture
def write_config(tmp_path):
    def write(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return write
