from __future__ import annotations

import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    def _report(number: int, ok: bool, detail: str, seconds: float) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({seconds:.1f} s) {detail}"
        _LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
