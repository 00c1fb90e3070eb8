"""
Shared fixtures. The package uses flat imports rooted at src/, so src is put on the path here.
"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from model.kernel import FbmVolterra, RiemannLiouville  # noqa: E402
from model.path import TimeGrid  # noqa: E402
from service.path_service import PathService  # noqa: E402
from service.solver_service import SolverService  # noqa: E402


@pytest.fixture
def grid16():
    return TimeGrid(1.0, 16)


@pytest.fixture
def grid32():
    return TimeGrid(1.0, 32)


@pytest.fixture
def rough_fbm():
    return FbmVolterra(0.3)


@pytest.fixture
def smooth_fbm():
    return FbmVolterra(0.7)


@pytest.fixture
def brownian_rl():
    return RiemannLiouville(0.5)


@pytest.fixture
def path_service():
    return PathService(threads=1)


@pytest.fixture
def solver_service(path_service):
    return SolverService(path_service)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep VOLTERRA_* variables of the developer's shell out of the tests."""
    for name in ("VOLTERRA_OUTPUT_DIR", "VOLTERRA_THREADS", "VOLTERRA_LOG_LEVEL", "VOLTERRA_LOG_FILE"):
        monkeypatch.delenv(name, raising=False)
