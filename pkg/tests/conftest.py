import numpy as np
import pytest

from bhf.grid import build_grid


@pytest.fixture(scope="session")
def desk_grid():
    """The 8 x 26 x 2 = 416 node grid on [0.5, 2]."""
    return build_grid(0.5, 2.0, 8, 26)


@pytest.fixture(scope="session")
def small_grid():
    """4 x 14 x 2 = 112 nodes; enough for solver-level checks."""
    return build_grid(0.5, 2.0, 4, 14)


@pytest.fixture(scope="session")
def tiny_grid():
    return build_grid(0.5, 2.0, 2, 6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record one acceptance line, then assert on it."""
    lines = request.config.stash[_VERDICTS]

    def record(number: int, title: str, ok: bool, detail: str):
        line = f"[{number:>2}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
