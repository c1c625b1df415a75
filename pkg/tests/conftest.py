import numpy as np
import pytest

SEED = 20260823


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one pass/fail line per acceptance criterion."""
    reports = []
    for key in ("passed", "failed", "error"):
        reports.extend(terminalreporter.stats.get(key, []))
    acceptance = sorted(
        (r for r in reports
         if "test_acceptance" in r.nodeid and getattr(r, "when", "call") in ("call", "setup")),
        key=lambda r: r.nodeid,
    )
    if not acceptance:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    seen = set()
    for r in acceptance:
        name = r.nodeid.split("::")[-1]
        if name in seen:
            continue
        seen.add(name)
        flag = "PASS" if r.passed else "FAIL"
        terminalreporter.write_line(f"{flag}  {name}")
