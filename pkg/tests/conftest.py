import numpy as np
import pytest

from shutterangle import Vec2Field


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def uniform_pair(width, height, flow, blur):
    return Vec2Field.constant(width, height, flow), Vec2Field.constant(width, height, blur)


_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    ok = _criteria.get(number, (title, True))[1]
    _criteria[number] = (title, ok and call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, (title, ok) in sorted(_criteria.items()):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}")
