import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call":
        return
    label = getattr(item.function, "_criterion", None)
    if label is None:
        return
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        status = "PASS" if rep.passed else "FAIL"
        reporter.write_line(f"[acceptance] criterion {label}: {status} ({rep.duration:.1f}s)")
