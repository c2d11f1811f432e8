import pytest

from vlcpos.channel import BounceIntegrator
from vlcpos.scene import default_scene


@pytest.fixture(scope="session")
def scene():
    return default_scene()


@pytest.fixture(scope="session")
def integrator(scene):
    """Primed 3-bounce integrator for the default room, shared across tests."""
    integ = BounceIntegrator(scene.room, 3)
    integ.prime(scene.transmitters)
    return integ
