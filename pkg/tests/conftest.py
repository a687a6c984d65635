def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for _, (_, line) in sorted(RESULTS.items()):
            terminalreporter.write_line(line)
