import re

import pytest

# criterion number -> short title, printed in the terminal summary
CRITERIA = {
    1: "sample-size reproduction",
    2: "power exactness",
    3: "optional stopping false positive rates",
    4: "significance filter",
    5: "multiplicity",
    6: "expected-P quantile curves",
    7: "pseudo-data fitter",
    8: "distribution primitives",
    9: "null uniformity",
    10: "determinism",
}

_outcomes = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"::test_ac(\d+)_", report.nodeid)
    if not m:
        return
    num = int(m.group(1))
    failed = report.failed or (report.when == "setup" and report.skipped)
    if report.when == "call" or failed:
        prev = _outcomes.get(num, True)
        _outcomes[num] = prev and not failed


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        status = "PASS" if _outcomes[num] else "FAIL"
        terminalreporter.write_line(f"AC{num:<3}{status}  {CRITERIA.get(num, '')}")


@pytest.fixture(scope="session")
def np_rng():
    import numpy as np

    return np.random.default_rng(987654321)
