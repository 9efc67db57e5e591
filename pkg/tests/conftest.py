from datetime import datetime, timezone
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

FIXTURES = Path(__file__).parent / "fixtures"
EPOCH = datetime(2007, 5, 1, 12, 0, 0, tzinfo=timezone.utc)

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


# -- acceptance verdicts -------------------------------------------------------------
# Each acceptance test files one line; a test that errors before reaching its
# verdict is reported as FAIL with the exception text.

VERDICTS: dict[str, tuple[str, bool, str]] = {}


@pytest.fixture
def verdict(request):
    def record(name: str, passed: bool, detail: str) -> None:
        VERDICTS[request.node.nodeid] = (name, bool(passed), detail)
        line = f"{'PASS' if passed else 'FAIL'} {name}: {detail}"
        print(line)
        assert passed, line
    return record


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid or report.when != "call":
        return
    if report.failed and report.nodeid not in VERDICTS:
        reason = str(report.longrepr).strip().splitlines()[-1] if report.longrepr else ""
        VERDICTS[report.nodeid] = (report.nodeid.split("::")[-1], False, f"error: {reason}")


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in VERDICTS.values():
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
