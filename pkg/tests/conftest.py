"""Shared test hooks.

Echoes one PASS/FAIL line per acceptance check so the verdicts survive in
plain-text logs regardless of verbosity flags.
"""


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    if report.passed:
        verdict = "PASS"
    elif report.failed:
        verdict = "FAIL"
    else:
        verdict = "SKIP"
    name = report.nodeid.split("::")[-1]
    print(f"\n[acceptance] {name}: {verdict}", flush=True)
