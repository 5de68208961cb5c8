import pytest

from jumpeig.model import build_grid, build_jump_measure, build_rate_field


@pytest.fixture(scope="session")
def grid():
    return build_grid(2000)


@pytest.fixture(scope="session")
def const_V(grid):
    return build_rate_field("constant", grid)


@pytest.fixture(scope="session")
def uniform_mu(grid):
    return build_jump_measure("uniform", grid)
