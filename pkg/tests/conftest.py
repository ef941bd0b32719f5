def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS, format_line

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(format_line(number))
