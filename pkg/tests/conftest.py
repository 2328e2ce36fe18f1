def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    lines = [RESULTS[k].line() for k in sorted(k for k in RESULTS if isinstance(k, int))]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
    terminalreporter.write_line(f"acceptance suite wall time: {RESULTS['elapsed']:.1f} s")
