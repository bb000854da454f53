"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_outcomes: dict = {}  # criterion -> [passed, [details], seconds]


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed or rep.skipped):
        return
    entry = _outcomes.setdefault(marker.args[0], [True, [], 0.0])
    entry[0] = entry[0] and rep.passed
    entry[1].extend(str(v) for k, v in item.user_properties if k == "detail")
    if rep.failed:
        entry[1].append(f"{item.name} failed")
    entry[2] += rep.duration


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        passed, details, seconds = _outcomes[num]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2}: {status} ({seconds:.1f}s) " + "; ".join(details))
    total = sum(v[2] for v in _outcomes.values())
    terminalreporter.write_line(f"acceptance time: {total:.1f}s (limit 600s)")
