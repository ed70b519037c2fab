import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        ok = rep.outcome == "passed"
        detail = "" if ok else str(rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash")
                                   else rep.longrepr).splitlines()[0]
        _RESULTS[n] = (ok, item.name, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, name, detail = _RESULTS[n]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {name}"
        if detail:
            line += f"  -- {detail[:200]}"
        terminalreporter.write_line(line)
