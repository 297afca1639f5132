from hypothesis import HealthCheck
from hypothesis import settings
import numpy as np
import pytest

from SNS_ROUGH import config
from SNS_ROUGH.solver import SolverConfig
from SNS_ROUGH.spectral import TorusGrid
from SNS_ROUGH.state import CalibrationStore


# the autouse output fixture below is reset per test, not per example
settings.register_profile("sns-rough", deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("sns-rough")


@pytest.fixture(autouse=True)
def isolated_outputs(tmp_path, monkeypatch):
    """Keep run outputs and calibration files inside the test's temporary directory."""
    monkeypatch.setattr(config, "OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setattr(config, "CALIBRATION_FILE", str(tmp_path / "calibration.json"))
    monkeypatch.setattr(config, "WORKERS", 1)


@pytest.fixture
def grid():
    return TorusGrid(N=16)


@pytest.fixture
def grid3():
    return TorusGrid(d=3, N=8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    """Eight steps on a 16^2 grid, recorded every other step."""
    return SolverConfig(N=16, T=2.0 ** -5, dt=2.0 ** -8, record_stride=2, gn_constant=1.0)


@pytest.fixture
def store(tmp_path):
    return CalibrationStore(str(tmp_path / "store" / "calibration.json"))
