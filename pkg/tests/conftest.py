_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.skipped):
        _ACCEPTANCE.extend(v for k, v in report.user_properties if k == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(_ACCEPTANCE), key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
