ACCEPTANCE_FILE = "test_acceptance.py"
_outcomes: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if ACCEPTANCE_FILE not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        if report.skipped:
            detail = report.longrepr[2] if isinstance(report.longrepr, tuple) else detail
        _outcomes[report.nodeid] = (report.outcome.upper(), detail)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (outcome, detail) in _outcomes.items():
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{outcome:7s} {name}  {detail}")
