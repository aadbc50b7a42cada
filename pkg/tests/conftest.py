import numpy as np
import pytest

from pseudopara import GridSpec

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""
    def record(num, title, passed, detail=""):
        _ACCEPTANCE.append((num, title, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num, title, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        tr.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")


@pytest.fixture
def grid1():
    return GridSpec(1, 16.0, 64)


@pytest.fixture
def grid2():
    return GridSpec(2, 16.0, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
