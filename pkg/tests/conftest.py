from hypothesis import settings

# exact arithmetic makes per-example timing uneven; correctness is what these tests check
settings.register_profile("exact", deadline=None)
settings.load_profile("exact")


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for code in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[code].line())
