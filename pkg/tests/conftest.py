import json
from pathlib import Path

import pytest

from ramancomb.fiber_models import (
    FiberGeometry,
    FiberSpan,
    LossProfile,
    ScaledRamanGain,
    load_bundled_table,
    walker_ssmf_params,
)

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


@pytest.fixture(scope="session")
def geometry():
    return FiberGeometry.from_cladding()


@pytest.fixture(scope="session")
def table():
    return load_bundled_table()


@pytest.fixture(scope="session")
def realistic_span(geometry, table):
    return FiberSpan(70e3, LossProfile.parametric(walker_ssmf_params()), ScaledRamanGain(table, geometry))


@pytest.fixture(scope="session")
def flat_span(geometry, table):
    return FiberSpan(70e3, LossProfile.flat(0.2), ScaledRamanGain(table, geometry))


# One summary line per acceptance criterion, taken from the test outcome.
_ACCEPTANCE = {}


@pytest.fixture
def record_detail(request):
    """Attach a one-line measurement summary to the current criterion."""
    marker = request.node.get_closest_marker("criterion")
    entry = _ACCEPTANCE.setdefault(marker.args[0], {"outcome": None, "detail": ""})

    def record(text):
        entry["detail"] = text

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    entry = _ACCEPTANCE.setdefault(marker.args[0], {"outcome": None, "detail": ""})
    if report.when == "call" or (report.when == "setup" and report.failed):
        entry["outcome"] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[n]
        status = entry["outcome"] or "NOT RUN"
        line = f"criterion {n}: {status}"
        if entry["detail"]:
            line += f"  ({entry['detail']})"
        terminalreporter.write_line(line)
