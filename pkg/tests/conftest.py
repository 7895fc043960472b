import pytest

TITLES = {
    "C1": "matrix vs FRF H-beta equivalence, 100 random loops",
    "C2": "MSD reproduction, undelayed and delayed; measured-FRF verdict",
    "C3": "reset integrator behind a delay is infeasible; GFORE Ny sign-stable",
    "C4": "SPR at the xi midpoint, violation outside the interval",
    "C5": "high-frequency limit conditions",
    "C6": "simulation: boundedness, resets, convergence, gamma = 1 vs expm",
    "C7": "Pade order selection and delayed equivalence",
    "C8": "property suites, 1000 cases each",
}

# criterion id -> [(test name, passed)]
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid): acceptance criterion id")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    runs = _CRITERIA.setdefault(mark.args[0], [])
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        runs.append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_CRITERIA, key=lambda c: int(c[1:])):
        runs = _CRITERIA[cid]
        ok = bool(runs) and all(p for _, p in runs)
        failed = [n for n, p in runs if not p]
        extra = f"  (failed: {', '.join(failed)})" if failed else ""
        tr.write_line(f"{cid} {'PASS' if ok else 'FAIL'}  {TITLES.get(cid, '')}  "
                      f"[{sum(p for _, p in runs)}/{len(runs)} checks]{extra}")
