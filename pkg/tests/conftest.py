"""Shared verdict collector: the headline checks each record one line that
is echoed as a block at the end of the run."""

VERDICTS: list[tuple[int, bool, str]] = []


def record(idx: int, ok: bool, detail: str) -> None:
    VERDICTS.append((idx, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.write_sep("-", "acceptance summary")
    for idx, ok, detail in sorted(VERDICTS):
        terminalreporter.write_line(
            f"[{idx:>2}] {'PASS' if ok else 'FAIL'} {detail}"
        )
