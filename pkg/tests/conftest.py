import sys
from pathlib import Path

# Make the oracle helpers importable from any test module.
sys.path.insert(0, str(Path(__file__).parent))

_criterion_lines: list[str] = []


def record_criterion(line: str) -> None:
    """Collect a one-line measurement for the end-of-run acceptance report."""
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if not _criterion_lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria measurements")
    for line in _criterion_lines:
        terminalreporter.write_line(line)
