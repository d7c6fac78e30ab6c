from __future__ import annotations

import time

import pytest

from noisepuf.harness import ScenarioConfig, run_scenario

ACCEPTANCE_LINES: list[str] = []
TIMINGS: dict[str, float] = {}


@pytest.fixture(scope="session")
def default_result():
    """The default scenario, run once and shared."""
    t0 = time.perf_counter()
    result = run_scenario(ScenarioConfig())
    TIMINGS["default_scenario"] = time.perf_counter() - t0
    return result


@pytest.fixture(scope="session")
def small_cfg():
    return ScenarioConfig(fleet_size=3, n_frames=200, reliability_repeats=2, n_challenges=2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
