"""Shared fixtures and the acceptance summary printed at the end of a run."""

import numpy as np
import pytest

from azumaya.calculus import AzumayaPoint
from azumaya.matrixalg import MatrixTuple
from pool import tuple_pool

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not mark.args:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        prev = _ACCEPTANCE.get(number, (title, "PASS"))[1]
        status = "PASS" if rep.outcome == "passed" and prev == "PASS" else "FAIL"
        _ACCEPTANCE[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")


@pytest.fixture(scope="session")
def pool():
    return tuple_pool()


@pytest.fixture(scope="session")
def pool_points(pool):
    return [AzumayaPoint(MatrixTuple(p.matrices)) for p in pool]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
