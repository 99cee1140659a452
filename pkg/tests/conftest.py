import pytest

from sram_pad.arraymodel import WorkloadProfile
from sram_pad.techmodel import load_technology

_RESULTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_RESULTS_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture
def record(request):
    """record(k, ok, detail): one PASS/FAIL line per criterion in the summary."""

    def _record(k, ok, detail=""):
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        request.config.stash[_RESULTS_KEY].append(line)
        print(line)
        return ok

    return _record


@pytest.fixture(scope="session")
def tech32():
    return load_technology("ptm32")


@pytest.fixture(scope="session")
def tech90():
    return load_technology("ptm90")


@pytest.fixture(scope="session")
def workload():
    return WorkloadProfile(200.0, 1000.0, 0.5, 0.5)
