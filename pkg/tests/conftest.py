import numpy as np
import pytest

from noma_ca.core.config import ExperimentConfig, GridSpec


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run full-scale Monte Carlo tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_grid():
    return GridSpec(grid_points_2d=21, grid_points_edge=101)


@pytest.fixture
def small_config(small_grid):
    return ExperimentConfig(
        n_instances=12,
        base_seed=3,
        noise_levels=(5e-12, 5e-11, 5e-10),
        grid=small_grid,
    )
