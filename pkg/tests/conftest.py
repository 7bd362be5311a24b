import pytest

_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one summary line per acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str, seconds: float) -> None:
        _LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}: {detail} ({seconds:.1f}s)")

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
