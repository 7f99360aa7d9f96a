_ACCEPTANCE_RESULTS = []


def record_criterion(number, description, passed, elapsed_s, note=""):
    _ACCEPTANCE_RESULTS.append((number, description, passed, elapsed_s, note))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, passed, elapsed, note in sorted(_ACCEPTANCE_RESULTS):
        status = "PASS" if passed else ("SKIP" if passed is None else "FAIL")
        line = f"criterion {number} [{status}] {description} ({elapsed:.1f}s)"
        if note:
            line += f" -- {note}"
        terminalreporter.write_line(line)
