import logging

import pytest

# acceptance tests attach a one-line summary to their report; the terminal
# summary prints one PASS/FAIL line per criterion
_lines = {}


@pytest.fixture
def criterion(request):
    notes = []
    request.node.user_properties.append(("criterion_notes", notes))
    return notes


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    for key, notes in item.user_properties:
        if key == "criterion_notes":
            status = "PASS" if report.passed else "FAIL"
            _lines[item.name] = (status, list(notes))


def pytest_terminal_summary(terminalreporter):
    if not _lines:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_lines, key=lambda n: int(n.split("_")[1])):
        status, notes = _lines[name]
        terminalreporter.write_line("%s %s" % (status, name))
        for note in notes:
            terminalreporter.write_line("    " + note)


@pytest.fixture(autouse=True)
def _quiet_solver_warnings():
    logging.getLogger("ds3").setLevel(logging.ERROR)
    yield
