import numpy as np
import pytest

from gpss.operator import DenseOperator, gen_gaussian_problem

_CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def report():
    """Record one acceptance line; the test still asserts on its own."""
    def _report(num, ok, detail=""):
        _CRITERIA.append((num, bool(ok), detail))
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return _report


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_problem():
    return gen_gaussian_problem(40, 120, 6, 0.02, seed=1)


def identity(p, scale=1.0):
    return DenseOperator(scale * np.eye(p))
