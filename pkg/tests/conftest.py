"""Shared test plumbing: the acceptance-criterion report."""

_CRITERION_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Register one acceptance-criterion outcome for the end-of-run summary."""
    _CRITERION_LINES.append(
        f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} — {detail}"
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_CRITERION_LINES):
        terminalreporter.write_line(line)
