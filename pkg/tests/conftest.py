import pytest


def pytest_configure(config):
    config.acceptance_lines = {}


@pytest.fixture
def acceptance(request, capsys):
    """Record ``(number, title, passed, detail)`` for the end-of-run acceptance summary."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title}: {detail}"
        request.config.acceptance_lines[(number, title)] = line
        with capsys.disabled():
            print("\n" + line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", {})
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
