"""Shared test configurations and fixtures."""

import logging
from unittest.mock import Mock

import pytest

from cat_balance.geometry import make_geometry
from cat_balance.grid import GridSpec
from cat_balance.logger import Logger
from cat_balance.models import BurgersModel, LinearModel, ShallowWaterModel


@pytest.fixture(scope="session")
def test_logger():
    """Create a test logger instance."""
    logger = Logger(log_file=None)
    logger.setLevel(logging.DEBUG)
    return logger


@pytest.fixture(autouse=True)
def disable_logging():
    """Disable logging for all tests by default."""
    logging.disable(logging.CRITICAL)
    yield
    logging.disable(logging.NOTSET)


@pytest.fixture
def mock_logger():
    """Create a mock logger with verbose mode enabled."""
    logger = Mock(spec=Logger)
    logger.verbose = True
    return logger


@pytest.fixture
def linear_model():
    """u_t + u_x = u H_x with H(x) = x."""
    return LinearModel(geometry=make_geometry("linear"))


@pytest.fixture
def burgers_model():
    """Burgers with the oscillatory H(x) = x + 0.1 sin(10 x)."""
    return BurgersModel(geometry=make_geometry("oscillatory"))


@pytest.fixture
def shallow_water_model():
    """Shallow water over the cosine bump used by the subcritical runs."""
    return ShallowWaterModel(geometry=make_geometry("sw-bump", amplitude=0.25, center=0.0, half_width=1.0))


@pytest.fixture
def line_grid():
    """41 nodes on [-1, 1] with three ghost nodes per side."""
    return GridSpec(-1.0, 1.0, 41, ghost=3)
