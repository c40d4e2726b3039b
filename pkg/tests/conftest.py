from __future__ import annotations

import _bootstrap  # noqa: F401
import pytest

from spread_seasonality.synth import ScenarioKind, SyntheticScenario, generate_event_stream

# Pre-market book 100.10 / 100.14, then six in-hours events that move the quote.
SAMPLE_EVENTS = """\
34140000,1,1,100,1001000,1
34140000,1,2,100,1001400,-1
34200500,1,3,200,1001200,1
34201000,2,3,100,1001200,1
34202000,1,4,100,1001300,-1
34203000,4,4,100,1001300,-1
34204000,5,0,50,1001300,-1
34205000,3,3,100,1001200,1
34206000,1,5,300,1000900,1
34207000,3,1,100,1001000,1
"""

# (time_ms, spread) pairs the sample replays to.
SAMPLE_SERIES = [
    (34200500, 200.0),
    (34202000, 100.0),
    (34203000, 200.0),
    (34205000, 400.0),
    (34207000, 500.0),
]


@pytest.fixture()
def sample_events_file(tmp_path):
    path = tmp_path / "TEST_2016-03-01_messages.csv"
    path.write_text(SAMPLE_EVENTS)
    return path


@pytest.fixture(scope="session")
def power_law_day():
    scenario = SyntheticScenario(kind=ScenarioKind.POWER_LAW_DECAY, n_changes=50_000, seed=7)
    events, truth = generate_event_stream(scenario)
    return scenario, events, truth


@pytest.fixture(scope="session")
def large_tick_day():
    scenario = SyntheticScenario(kind=ScenarioKind.SATURATING_LARGE_TICK, n_changes=20_000, seed=11)
    events, truth = generate_event_stream(scenario)
    return scenario, events, truth
