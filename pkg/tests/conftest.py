import pytest
from hypothesis import HealthCheck, settings

from glsemigroup import model_c, model_j

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def mc():
    return model_c()


@pytest.fixture(scope="session")
def mj():
    return model_j()


@pytest.fixture(params=["model-c", "model-j"], scope="session")
def model(request):
    return model_c() if request.param == "model-c" else model_j()


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
