import pytest

# (criterion number, passed, detail) appended by test_acceptance.py
ACCEPTANCE = []


@pytest.fixture
def record():
    def _record(number, passed, detail):
        ACCEPTANCE.append((number, bool(passed), detail))
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
