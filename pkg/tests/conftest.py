import numpy as np
import pytest

from helio2d.curve import ClosedCurve


@pytest.fixture(scope="session")
def star():
    return ClosedCurve.star(n=64)


@pytest.fixture(scope="session")
def circle():
    return ClosedCurve.circle(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Remember an acceptance outcome (AND-ed over sub-checks) for the summary."""
    prev = ACCEPTANCE.get(number)
    if prev is not None:
        ok = ok and prev[0]
        detail = prev[1] + "; " + detail
    ACCEPTANCE[number] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
