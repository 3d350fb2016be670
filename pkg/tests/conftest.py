import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).parent))

CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA):
            terminalreporter.write_line(line)
