import numpy as np
import pytest

from geometry.grid import CrossSection, build_grid
from material.wells import ElasticModel


@pytest.fixture(autouse=True)
def enable_db_access_for_all_tests(db):
    """Give every test database access without needing explicit marks."""
    return db


@pytest.fixture
def square_grid():
    """Square section of half-side 1/2, eight cells per half-length."""
    return build_grid(CrossSection("square", 0.5), 0.5, 0.0625)


@pytest.fixture
def disk_grid():
    return build_grid(CrossSection("disk", 0.25), 0.25, 0.0625)


@pytest.fixture
def model():
    return ElasticModel.isotropic(alpha=0.05, p=1.5)


@pytest.fixture
def flat_model():
    """No mismatch: H = I."""
    return ElasticModel.isotropic(alpha=0.0, p=1.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
