import numpy as np
import pytest

from paraloop.antenna import build_receivers, calibrated_antenna
from paraloop.baseband.library import build_step_library


@pytest.fixture(scope="session")
def antenna():
    return calibrated_antenna()


@pytest.fixture(scope="session")
def receivers():
    return build_receivers()


@pytest.fixture(scope="session")
def libraries(receivers):
    """Step-response libraries, built once per session (a few seconds each)."""
    cache = {}

    def get(kind):
        if kind not in cache:
            cache[kind] = build_step_library(receivers[kind])
        return cache[kind]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = {}


@pytest.fixture(scope="session")
def record():
    """``record(n, ok, detail)`` stores the result line for acceptance criterion ``n``."""
    def put(n, ok, detail):
        ACCEPTANCE[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return put


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
