import pytest

ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def accept(request):
    """Record an acceptance line, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(tag: str, title: str, ok: bool, detail: str):
        lines.append(f"[{'PASS' if ok else 'FAIL'}] criterion {tag}: {title} -- {detail}")
        assert ok, f"criterion {tag} ({title}): {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
