"""Shared test plumbing: the acceptance verdict registry.

Acceptance tests record one line per criterion; the hook below prints
them in the terminal summary so the verdicts are visible on a normal
``pytest -v`` run, where per-test stdout is captured.
"""

ACCEPTANCE_LINES: list[str] = []


def record_verdict(number: int, name: str, ok: bool, detail: str) -> str:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
