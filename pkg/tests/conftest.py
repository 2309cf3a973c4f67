import numpy as np
import pytest

# Local Imports
from shrinklab.models import shapes
from shrinklab.services.deformation import get_deformation
from shrinklab.services.flows import get_flows
from shrinklab.services.functionals import get_functionals
from shrinklab.services.geometry import get_geometry
from shrinklab.services.linking import get_linking


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: búsquedas de entropía y flujos largos")


@pytest.fixture
def geometry():
    return get_geometry()


@pytest.fixture
def functionals():
    return get_functionals()


@pytest.fixture
def linking():
    return get_linking()


@pytest.fixture
def flows():
    return get_flows()


@pytest.fixture
def deformation():
    return get_deformation()


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def disk():
    return shapes.disk_fan(n_boundary=32)


@pytest.fixture
def mobius():
    return shapes.mobius_strip()


@pytest.fixture
def sphere():
    return shapes.icosphere(subdivisions=3, radius=2.0)
