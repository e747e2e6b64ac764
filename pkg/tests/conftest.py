import logging

import pytest
from hypothesis import HealthCheck, settings

from flas.pipeline import build_models
from flas.workload import SCENARIOS

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# the decider logs a warning whenever a forecaster fails; keep test output readable
logging.getLogger("flas").setLevel(logging.ERROR)


@pytest.fixture(scope="session")
def scenario_models():
    """Fitted predictor bundles per scenario kind, built once per session."""
    cache = {}

    def get(kind):
        if kind not in cache:
            cache[kind] = build_models(kind)
        return cache[kind][0]

    return get


@pytest.fixture(scope="session")
def all_models(scenario_models):
    return {k: scenario_models(k) for k in SCENARIOS}


# acceptance criteria append (number, passed, detail) here; the lines are
# repeated in the terminal summary so they survive output capture
CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(CRITERIA):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
