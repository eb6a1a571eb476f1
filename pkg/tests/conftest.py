import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import criteria  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if criteria.LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(criteria.LINES, key=lambda t: t[0]):
            terminalreporter.write_line(line)
