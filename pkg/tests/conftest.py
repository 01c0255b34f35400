import numpy as np
import pytest

from sparseclt.ensemble import AdjacencySample


@pytest.fixture
def path3() -> AdjacencySample:
    return AdjacencySample.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def star4() -> AdjacencySample:
    return AdjacencySample.from_edges(4, [(0, 1), (0, 2), (0, 3)])


@pytest.fixture
def empty3() -> AdjacencySample:
    return AdjacencySample(3, np.empty((0, 2), dtype=np.int64))


def pytest_configure(config):
    config._criterion_lines = []


@pytest.fixture
def criterion(request, capsys):
    """Record a criterion verdict; echoed live and repeated in the terminal summary."""

    def log(label: str, passed: bool, detail: str = "") -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip("; ")
        request.config._criterion_lines.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return passed

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
