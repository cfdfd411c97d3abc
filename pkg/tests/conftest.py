from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

# Acceptance verdicts, echoed at the end of the run regardless of capture mode.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
