"""Shared example codes and the acceptance summary printer."""
import pytest

from pmcodes import make_code

MSR7_POINTS = [0, 1, 3, 2, 6, 5, 4]

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _RESULTS.get(number)
        ok = report.outcome == "passed"
        _RESULTS[number] = (title, ok and (prev is None or prev[1]), report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, seconds = _RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title} ({seconds:.2f}s)")


# --------------------------------------------------------------------------
# the worked example codes


def mbr_five_node():
    """MBR [5,2,2] over GF(5) with encoding rows [1,0],[0,1],[1,1],[1,2],[1,3]."""
    return make_code("mbr", 5, 2, 2, 5, psi_rows=[[1, 0], [0, 1], [1, 1], [1, 2], [1, 3]])


def mbr_secure_three_node():
    """MBR [3,2,2] over GF(3), ell=m=1, encoding vectors [1, i]."""
    return make_code("mbr", 3, 2, 2, 3, ell=1, m=1, psi_rows=[[1, 1], [1, 2], [1, 0]])


def msr_seven_node(**kw):
    return make_code("msr", 7, 3, 4, 13, points=MSR7_POINTS, **kw)


def msr_shortened():
    return make_code("msr", 6, 2, 3, 13, points=MSR7_POINTS)


def msr_secure_seven_node():
    return make_code("msr", 7, 3, 4, 13, ell=1, m=0, points=MSR7_POINTS)


@pytest.fixture
def mbr5():
    return mbr_five_node()


@pytest.fixture
def mbr3_secure():
    return mbr_secure_three_node()


@pytest.fixture
def msr7():
    return msr_seven_node()
