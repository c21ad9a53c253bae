import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# Filled by the acceptance module: criterion id -> (passed, detail).
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture
def criterion():
    """Record a named acceptance outcome, then assert it."""
    def check(key: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS[key] = (bool(passed), detail)
        print(f"{key}: {'PASS' if passed else 'FAIL'}  {detail}")
        assert passed, detail
    return check


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{key}: {'PASS' if passed else 'FAIL'}  {detail}")
