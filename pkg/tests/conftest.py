from acceptance_report import lines


def pytest_terminal_summary(terminalreporter):
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
