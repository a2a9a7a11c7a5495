"""Collect acceptance outcomes and print one line per criterion."""
from collections import defaultdict

import pytest

CRITERIA = {
    1: "Table 1 benchmark column",
    2: "cross-route bond identity",
    3: "Monte Carlo vs closed forms",
    4: "integral moment vs mu-derivative",
    5: "delta gate",
    6: "vega gates",
    7: "special-function suite",
    8: "dimension-zero absorption demo",
    9: "calibration round-trip",
    10: "expansion diagnostics",
}

_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        msg = ""
        if rep.failed and call.excinfo is not None:
            msg = str(call.excinfo.value).strip().splitlines()[0] if str(call.excinfo.value).strip() else ""
        _outcomes[marker.args[0]].append((item.name, rep.outcome, msg))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        res = _outcomes.get(n)
        if not res:
            tr.write_line(f"criterion {n:>2} NOT RUN  {title}")
            continue
        passed = sum(1 for _, o, _ in res if o == "passed")
        bad = [(name, msg) for name, o, msg in res if o != "passed"]
        status = "PASS" if not bad else "FAIL"
        line = f"criterion {n:>2} {status}  {title} ({passed}/{len(res)} checks)"
        if bad:
            name, msg = bad[0]
            line += f"; first failure {name}: {msg[:200]}"
        tr.write_line(line)
