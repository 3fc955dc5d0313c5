import numpy as np
import pytest

from pclpv.orthopoly import ParameterDistribution


@pytest.fixture
def unit_uniform():
    return ParameterDistribution.uniform(-1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def reference_config():
    from pclpv.config import load_config

    return load_config(None)


@pytest.fixture(scope="session")
def missile(reference_config):
    from pclpv.plant import MissileConfig

    return MissileConfig.from_dict(reference_config["model"], reference_config["uncertainty"]["range"])


@pytest.fixture(scope="session")
def missile_system(missile):
    from pclpv.plant import missile_quasi_lpv

    return missile_quasi_lpv(missile)
