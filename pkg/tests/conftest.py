import sys

CRITERIA = range(1, 13)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None:
        return
    ran = {int(r.nodeid.split("test_c")[1][:2]) for key in ("passed", "failed", "error")
           for r in terminalreporter.stats.get(key, []) if "test_acceptance.py::test_c" in r.nodeid}
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n in CRITERIA:
        if n not in ran:
            continue
        ok, detail = module.RESULTS.get(n, (False, "raised before reporting a result; see the failure above"))
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}")
