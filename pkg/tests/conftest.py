"""Collect acceptance verdicts and print them once at the end of the run."""

from pathlib import Path

import pytest

REPORT_PATH = Path(__file__).resolve().parent.parent / "acceptance_report.txt"
_lines: list[str] = []
_notes: list[str] = []


class Report:
    def verdict(self, number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _lines.append(line)

    def note(self, text: str) -> None:
        _notes.append(text)


@pytest.fixture(scope="session")
def report():
    return Report()


def pytest_terminal_summary(terminalreporter):
    if not _lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_lines):
        terminalreporter.write_line(line)
    text = "\n".join(sorted(_lines)) + "\n"
    if _notes:
        text += "\n" + "\n".join(_notes) + "\n"
    REPORT_PATH.write_text(text, encoding="utf-8")
