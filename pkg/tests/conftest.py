import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

TESTS_DIR = Path(__file__).parent
DATA_DIR = TESTS_DIR / "data"
FAKE_SERVER = TESTS_DIR / "fake_server.py"

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def server_command(*extra: str) -> list[str]:
    return [sys.executable, str(FAKE_SERVER), *extra]


@pytest.fixture
def server_cmd():
    return server_command
