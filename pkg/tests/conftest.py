_acceptance_lines = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance_lines.extend(l for l in report.capstdout.splitlines() if l.startswith("[C"))


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance")
        for line in sorted(_acceptance_lines, key=lambda l: int(l[2:l.index("]")])):
            terminalreporter.write_line(line)
