import pytest

from config.settings import get_settings
from services.cantor_service import make_spec, triadic as triadic_spec


@pytest.fixture
def triadic():
    return triadic_spec()


@pytest.fixture
def quintic():
    """p=3, q=2, r=5 with pattern keep,gap,keep,gap,keep."""
    return make_spec(3, 2, 5)


@pytest.fixture
def settings(monkeypatch):
    """Override Settings fields through the environment: settings(MAX_INTERVALS=16)."""

    def apply(**overrides):
        for key, value in overrides.items():
            monkeypatch.setenv(key, str(value))
        get_settings.cache_clear()
        return get_settings()

    yield apply
    get_settings.cache_clear()
