"""Shared fixtures: the benchmark closed-loop runs, integrated once."""

import time

import pytest

from purefb import scenarios

_criterion_lines = []


@pytest.fixture(scope="session")
def criterion():
    """Record and print one pass/fail line per acceptance criterion."""

    def check(ok, label, detail=""):
        line = "[%s] %s%s" % ("PASS" if ok else "FAIL", label,
                              " -- " + detail if detail else "")
        print(line)
        _criterion_lines.append(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)


def _timed_run(scn):
    start = time.perf_counter()
    traj = scn.run()
    return traj, time.perf_counter() - start


@pytest.fixture(scope="session")
def paper_scenario():
    return scenarios.build("numeric-2d", mode="paper")


@pytest.fixture(scope="session")
def paper_run(paper_scenario):
    """Nominal two-state run with the closed-form gain shapes: (traj, secs)."""
    return _timed_run(paper_scenario)


@pytest.fixture(scope="session")
def auto_scenario():
    return scenarios.build("numeric-2d", mode="auto")


@pytest.fixture(scope="session")
def auto_run(auto_scenario):
    """Same loop under the constructive synthesis: (traj, secs)."""
    return _timed_run(auto_scenario)


@pytest.fixture(scope="session")
def missile_scenario():
    return scenarios.build("stt-missile")


@pytest.fixture(scope="session")
def missile_run(missile_scenario):
    """Roll-autopilot run at the published flight condition: (traj, secs)."""
    return _timed_run(missile_scenario)
