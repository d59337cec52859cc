import warnings

import numpy as np
import pytest

from fracnls import _kernels
from fracnls.functional import Params
from fracnls.grid import make_grid
from fracnls.groundstate import MinimizeConfig, minimize

BACKENDS = sorted(_kernels.backends())


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    mod = _kernels.backends()[request.param]
    for name in _kernels.NAMES:
        monkeypatch.setattr(_kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_field(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def smooth_field(rng, grid, kmax=4, amplitude=1.0):
    """Random complex trigonometric polynomial with modes |k| <= kmax per axis."""
    idx = np.fft.fftfreq(grid.n, 1.0 / grid.n)
    mask = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        sh = [1] * grid.dim
        sh[ax] = grid.n
        mask &= (np.abs(idx) <= kmax).reshape(sh)
    coef = random_field(rng, grid.shape) * mask
    u = np.fft.ifftn(coef)
    return amplitude * u / np.max(np.abs(u))


@pytest.fixture(scope="session")
def desk_grid():
    return make_grid(2, 128, 40.0)


@pytest.fixture(scope="session")
def desk_params():
    return Params()


@pytest.fixture(scope="session")
def desk_result(desk_grid, desk_params):
    """Converged default desk-scale minimizer, computed once per session."""
    return minimize(desk_params, MinimizeConfig(), desk_grid)


@pytest.fixture(scope="session")
def line_grid():
    return make_grid(1, 256, 64.0)


@pytest.fixture(scope="session")
def line_params():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return Params(p1=3.0, p2=3.0, r1=1.4, r2=1.4)


@pytest.fixture(scope="session")
def line_result(line_grid, line_params):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return minimize(line_params, MinimizeConfig(), line_grid)
