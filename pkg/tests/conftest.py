from __future__ import annotations

import pytest

from powershift.model import PowershiftParams, ShaftState
from powershift.scenario import Schedule, Scenario, load_scenario, bundled_scenario_path

RIG = PowershiftParams(J1=0.1, J2=0.5, Ra=3.0, Rb=2.0, Ts=0.02)


def make_scenario(
    m=(0.0, 0.0),
    caps=(0.0, 0.0),
    w0=(0.0, 0.0),
    t_end=1.0,
    params: PowershiftParams = RIG,
) -> Scenario:
    """Scenario with constant torques and capacities."""
    return Scenario(
        params=params,
        w0=ShaftState(*w0),
        m1=Schedule.constant(m[0]),
        m2=Schedule.constant(m[1]),
        kca=Schedule.constant(caps[0]),
        kcb=Schedule.constant(caps[1]),
        t_end=t_end,
    )


@pytest.fixture(scope="session")
def paper_like() -> Scenario:
    return load_scenario(bundled_scenario_path("paper_like"))


# acceptance verdicts, printed at the end of the session
_VERDICTS: list[tuple[int, bool, str]] = []


@pytest.fixture
def verdict():
    def record(n: int, ok: bool, detail: str) -> bool:
        _VERDICTS.append((n, ok, detail))
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(_VERDICTS):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
