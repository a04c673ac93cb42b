"""
Pytest configuration and shared fixtures for fpdyn tests.
"""
import os
import shutil
import tempfile
from unittest.mock import patch

import pytest

from fpdyn.config import Config
from fpdyn.data_types import PayoffMatrix

# Steps of the main dynamic for I_2 up to t = 30 (levels 1..3).
MAIN_I2_STEPS = (
    [(1, 2), (2, 2)]
    + [(2, 2)] + [(2, 1)] * 4 + [(1, 1)] * 5
    + [(1, 1)] + [(1, 2)] * 8 + [(2, 2)] * 9
)


@pytest.fixture(autouse=True)
def clean_env():
    """Keep FPDYN_* variables from the developer's shell out of every test."""
    cleared = {key: value for key, value in os.environ.items() if not key.startswith("FPDYN_")}
    with patch.dict(os.environ, cleared, clear=True):
        Config.refresh()
        yield
    Config.refresh()


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test outputs."""
    dirpath = tempfile.mkdtemp()
    yield dirpath
    shutil.rmtree(dirpath)


@pytest.fixture
def main_i2_steps():
    return list(MAIN_I2_STEPS)


@pytest.fixture
def i2():
    return PayoffMatrix.identity(2)


@pytest.fixture
def i3():
    return PayoffMatrix.identity(3)


@pytest.fixture
def rock_paper_scissors():
    return PayoffMatrix(entries=((0, -1, 1), (1, 0, -1), (-1, 1, 0)))
