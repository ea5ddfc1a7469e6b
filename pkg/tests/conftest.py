import numpy as np
import pytest

from scengen.fixtures import build_fixture
from scengen.pipeline import ModelOptions, fit_model


@pytest.fixture(scope="session")
def small_fixture():
    """4 VRE + 2 hydro stations, 12 years with hourly VRE history."""
    return build_fixture(n_vre=4, n_hydro=2, years=12, seed=3, hourly=True)


@pytest.fixture(scope="session")
def small_model(small_fixture):
    return fit_model(small_fixture.vre_hourly, small_fixture.inflows_monthly,
                     ModelOptions(max_parents=3, restarts=2, seed=17))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
