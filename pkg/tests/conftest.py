import logging

import pytest

from jason_rs.scenario import Evacuator, ScenarioSpec, build_scenario_stack

logging.getLogger("jason_rs").setLevel(logging.WARNING)


@pytest.fixture
def spec3() -> ScenarioSpec:
    return ScenarioSpec(
        evacuators=(Evacuator("e1", 10), Evacuator("e2", 7), Evacuator("e3", 12)),
        sensor_bindings=((1, "e1"), (2, "e2"), (3, "e3")),
    )


@pytest.fixture
def http_scenario(spec3):
    """Scenario stack served over loopback HTTP with the scheduler running."""
    stack, token = build_scenario_stack(spec3, deterministic_clock=False)
    server = stack.start_http()
    try:
        yield stack, server.base_url, token
    finally:
        stack.shutdown()
