import numpy as np
import pytest

from sgmorph.core import from_polylines

# criterion number -> [title, all passed so far, tests seen]
_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    num, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry = _ACCEPTANCE.setdefault(num, [title, True, 0])
        entry[1] = entry[1] and rep.passed
        entry[2] += 1


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        title, ok, n = _ACCEPTANCE[num]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {title}  ({n} checks)")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def path3():
    return from_polylines([[[0, 0], [1, 0]], [[1, 0], [2, 0]]])


@pytest.fixture
def triangle():
    h = np.sqrt(3) / 2
    return from_polylines([[[0, 0], [1, 0]], [[1, 0], [0.5, h]], [[0.5, h], [0, 0]]])
