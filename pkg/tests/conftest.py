import time

import pytest

from splitlab.lab import ReferenceCache, convergence_study, dyadic_sweep
from splitlab.scenarios import builtin_scenario
from splitlab.splitting import SchemeKind

_LINES: dict[str, str] = {}


@pytest.fixture(scope="session")
def acceptance():
    """Record one verdict line per acceptance criterion."""

    def record(ac, ok, detail):
        line = f"{ac}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES[ac] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for ac in sorted(_LINES, key=lambda k: int(k[2:])):
            terminalreporter.write_line(_LINES[ac])


SWEEPS = {
    "ex1": ((4, 9), [SchemeKind.CLASSICAL, SchemeKind.CORRECTED_INVARIANT]),
    "ex2": ((4, 9), [SchemeKind.CLASSICAL, SchemeKind.CORRECTED_INVARIANT]),
    "ex3": ((4, 9), [SchemeKind.CLASSICAL, SchemeKind.CORRECTED_LINEAR]),
    "ex2d": ((4, 8), [SchemeKind.CLASSICAL, SchemeKind.CORRECTED_INVARIANT]),
}


@pytest.fixture(scope="session")
def studies(tmp_path_factory):
    """Lazily run and memoise the paper's convergence studies.

    ``studies(name)`` returns ``(report, seconds, error)``; ``error`` is the
    exception when the study could not run at all.
    """
    cache = ReferenceCache(tmp_path_factory.mktemp("refcache"))
    done = {}

    def get(name):
        if name not in done:
            s = builtin_scenario(name)
            (k0, k1), kinds = SWEEPS[name]
            start = time.perf_counter()
            try:
                report, err = convergence_study(s, kinds, dyadic_sweep(k0, k1, s.T), cache=cache), None
            except Exception as exc:  # recorded as a failed criterion, not a crash
                report, err = None, exc
            done[name] = (report, time.perf_counter() - start, err)
        return done[name]

    get.cache = cache
    return get
