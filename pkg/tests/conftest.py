from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record_criterion(number, title, passed, detail=""):
    ACCEPTANCE_LINES[number] = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}: {title}" + (
        f"  [{detail}]" if detail else "")
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
