import numpy as np
import pytest

from adaptive_robust.rng import substream

_REPORT_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_REPORT_KEY] = []


@pytest.fixture
def report(request):
    """Record one acceptance line; it is echoed at the end of the run."""
    lines = request.config.stash[_REPORT_KEY]

    def _emit(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return _emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_REPORT_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return substream(12345)


def random_unit(rng, d):
    x = rng.standard_normal(d)
    return x / np.linalg.norm(x)
