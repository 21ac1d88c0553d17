import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

VERDICTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        VERDICTS[crit] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(VERDICTS, key=lambda c: int(c.split()[0])):
        terminalreporter.write_line(f"{VERDICTS[crit]}  criterion {crit}")
