import pytest

from attentrack.scenarios import default_setup, generate_reference_histograms


@pytest.fixture(scope="session")
def setup():
    """(room, signs, cfg) for the builtin default configuration."""
    return default_setup()


@pytest.fixture(scope="session")
def room(setup):
    return setup[0]


@pytest.fixture(scope="session")
def signs(setup):
    return setup[1]


@pytest.fixture(scope="session")
def cfg(setup):
    return setup[2]


@pytest.fixture(scope="session")
def refs(room, cfg):
    return generate_reference_histograms(room, cfg)
