"""Shared pytest wiring: acceptance-criterion result lines.

Tests marked ``@pytest.mark.acceptance("<criterion>")`` get one summary line
each at the end of the run::

    [ACCEPTANCE] <criterion>: PASS|FAIL|SKIP

so a release gate can grep the output instead of parsing pytest internals.
"""

import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(name): gating release criterion; prints a PASS/FAIL summary line",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        report.acceptance_name = marker.args[0]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Aggregate per criterion: any failure wins, then any pass, else skip.
    outcomes: dict[str, str] = {}
    for reports in terminalreporter.stats.values():
        for report in reports:
            name = getattr(report, "acceptance_name", None)
            if name is None:
                continue
            if getattr(report, "when", None) not in ("call", "setup"):
                continue
            previous = outcomes.get(name)
            if report.failed or previous == "FAIL":
                outcomes[name] = "FAIL"
            elif report.passed or previous == "PASS":
                outcomes[name] = "PASS"
            elif previous is None:
                outcomes[name] = "SKIP"
    if not outcomes:
        return
    terminalreporter.write_line("")
    for name, status in outcomes.items():
        terminalreporter.write_line(f"[ACCEPTANCE] {name}: {status}")
