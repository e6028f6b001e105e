import numpy as np
import pytest

from planactlearn.harness import fixtures


@pytest.fixture
def ex1():
    return fixtures.example1_domain()


@pytest.fixture
def ex1_world():
    return fixtures.example1_world()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.acceptance_results = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; the summary prints one line per criterion."""
    results = request.config.acceptance_results

    def record(number: int, ok: bool, detail: str) -> bool:
        results[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "acceptance_results", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
