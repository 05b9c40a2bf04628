import numpy as np
import pytest

from deltacorners.geometry import build_polygon

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
TRIANGLE = [(0.0, 0.0), (1.0, 0.0), (0.5, np.sqrt(3) / 2)]


@pytest.fixture(scope="session")
def square():
    return build_polygon(UNIT_SQUARE)


@pytest.fixture(scope="session")
def triangle():
    return build_polygon(TRIANGLE)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical check")


# acceptance report --------------------------------------------------------------
ACCEPTANCE = {}


def record(number, passed, detail, elapsed, budget):
    ok = bool(passed) and elapsed < budget
    line = (f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}  "
            f"[{elapsed:.1f} s / {budget:.0f} s]")
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
