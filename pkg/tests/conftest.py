import pytest

_RESULTS = []


@pytest.fixture
def report_criterion():
    """Record one acceptance line; printed again in the terminal summary."""
    def record(number, title, checks):
        ok = all(bool(c[1]) for c in checks)
        detail = "; ".join(f"{c[0]}: {c[2]} ({c[3]})" for c in checks)
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}: {detail}"
        print(line)
        _RESULTS.append((number, line))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_RESULTS):
        terminalreporter.write_line(line)
