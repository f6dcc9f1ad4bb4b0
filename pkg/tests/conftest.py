"""Collects outcomes of tests marked ``criterion`` and prints one line per
acceptance criterion at the end of the run."""
import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when != "call" and not (rep.when == "setup" and rep.outcome != "passed"):
        return
    num, title = mark.args
    entry = _RESULTS.setdefault(num, {"title": title, "ok": True, "notes": []})
    if rep.outcome != "passed" or hasattr(rep, "wasxfail"):
        entry["ok"] = False
        reason = getattr(rep, "wasxfail", "") or rep.longreprtext.splitlines()[-1:]
        entry["notes"].append(f"{item.name}: {reason if isinstance(reason, str) else ' '.join(reason)}")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        e = _RESULTS[num]
        line = f"criterion {num:2d} {'PASS' if e['ok'] else 'FAIL'}  {e['title']}"
        terminalreporter.write_line(line)
        for note in e["notes"]:
            terminalreporter.write_line(f"             {note}")
