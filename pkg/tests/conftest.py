import numpy as np
import pytest

from emla_vdc.config import default_geometry, default_inertia, gravity, load_config


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture(scope="session")
def geom(cfg):
    return default_geometry(cfg)


@pytest.fixture(scope="session")
def inertia(cfg):
    return default_inertia(cfg)


@pytest.fixture(scope="session")
def g_world(cfg):
    return gravity(cfg)


@pytest.fixture(scope="session")
def home(cfg):
    return np.asarray(cfg["home"], dtype=float)


def random_joints(geom, rng, n):
    """Sensor angles drawn inside the configured limits."""
    return rng.uniform(geom.joint_lower, geom.joint_upper, size=(n, 6))
