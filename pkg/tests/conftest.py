import numpy as np
import pytest

from eddi.basis import BasisLibrary, BasisTerm
from eddi.dynamics import SolverSpec, gen_duffing, gen_pendulum, integrate_rk45
from eddi.models import DampingModel, IdentifiedSystem, StiffnessModel
from eddi.series import TimeSeries


def linear_system(m=1.0, b=0.1, k=1.0):
    return IdentifiedSystem(
        m,
        DampingModel(BasisLibrary([BasisTerm(0, 1)]), [b]),
        StiffnessModel(BasisLibrary([BasisTerm(1, 0)]), [k]),
    )


def sampled(f, t_end, dt, t0=0.0):
    n = int(round((t_end - t0) / dt)) + 1
    t = t0 + np.arange(n) * dt
    return TimeSeries(t0, dt, f(t))


@pytest.fixture(scope="session")
def duffing():
    return gen_duffing()


@pytest.fixture(scope="session")
def pendulum():
    return gen_pendulum()


@pytest.fixture(scope="session")
def linear_oscillator():
    """m=1, b=0.1, k=1 released with unit velocity; 60 s at 1 kHz."""
    sys = linear_system()
    r = integrate_rk45(sys, (0.0, 1.0), SolverSpec(1000.0, 60.0, rtol=1e-12, atol=1e-16))
    return r, sys


# -- acceptance report ---------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None and (report.when == "call" or report.failed):
        measured = dict(item.user_properties).get("measured", "")
        item.config.stash.setdefault(_ACCEPTANCE, []).append(
            (mark.args[0], mark.args[1], item.name, report.passed, measured))
    return report


def pytest_terminal_summary(terminalreporter, config):
    rows = config.stash.get(_ACCEPTANCE, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    by_number = {}
    for number, title, name, passed, measured in rows:
        by_number.setdefault(number, (title, []))[1].append((name, passed, measured))
    for number in sorted(by_number):
        title, parts = by_number[number]
        verdict = "PASS" if all(p for _, p, _ in parts) else "FAIL"
        detail = "; ".join(
            f"{name}: {m}" if m else f"{name}: {'ok' if p else 'failed'}"
            for name, p, m in parts)
        terminalreporter.write_line(f"[{verdict}] {number:2d}. {title} | {detail}")
