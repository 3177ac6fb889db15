import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict = {}


def _put(criterion: int, label: str, verdict: str, detail: str) -> None:
    name = f"{criterion:>2}" + (f" ({label})" if label else "")
    line = f"criterion {name}: {verdict}  {detail}"
    ACCEPTANCE_LINES[(criterion, label)] = line
    print(line)


def record(criterion: int, passed: bool, detail: str, label: str = "") -> None:
    _put(criterion, label, "PASS" if passed else "FAIL", detail)


def record_not_run(criterion: int, detail: str, label: str = "") -> None:
    _put(criterion, label, "NOT RUN", detail)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
