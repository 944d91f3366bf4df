import numpy as np
import pytest

from dddm import kernels


@pytest.fixture(params=kernels.available())
def backend(request):
    """Run a test once per available kernel backend, restoring the default afterwards."""
    previous = kernels.BACKEND
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = []


@pytest.fixture
def acceptance(capsys):
    """``acceptance(n, title, ok, detail, seconds)`` prints and records one criterion line."""

    def record(n, title, ok, detail, seconds):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d} {title}: {detail} ({seconds:.1f}s)"
        _ACCEPTANCE.append((n, line))
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
