"""Cross-check the event engine against the fixed-step reference simulator."""
import sys
import os

import pytest

# Add src to path so we can import the module
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from ugv_uav_planner.config import SpeedConfig, StrategyConfig
from ugv_uav_planner.engine import run
from ugv_uav_planner.scenario import generate_instance
from ugv_uav_planner.strategies import make_strategy
from tests.conftest import jittered_grid
from tests.step_oracle import step_simulate

STRATEGIES = [
    "ugv-only",
    "kemeny",
    "k-shortest",
    "mpsp",
    "bidirectional",
    "multi-bidirectional:3",
]


def _strategy(text):
    return make_strategy(StrategyConfig.parse(text, m=5, mc_runs=50))


def _compare(network, seed, text, dt, speeds=SpeedConfig()):
    spec = generate_instance(network, seed)
    truth = spec.ground_truth(network)
    config = spec.sim_config(network, speeds)
    engine = run(network, truth, _strategy(text), config)
    stepped = step_simulate(network, truth, _strategy(text), config, dt=dt)

    assert [(e.kind, e.actor, e.edge) for e in engine.events] == [(e.kind, e.actor, e.edge) for e in stepped.events]
    for i, (a, b) in enumerate(zip(engine.events, stepped.events)):
        assert abs(a.time - b.time) <= 3 * dt * (i + 1)
    assert engine.reached == stepped.reached
    assert engine.edges_inspected == stepped.edges_inspected
    assert abs(engine.travel_time - stepped.travel_time) <= 3 * dt * (len(engine.events) + 1)


class TestEngineMatchesStepper:
    """Same events, same order, same times within the step resolution."""

    @pytest.mark.parametrize("seed", range(4))
    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_grid(self, grid_5x5, strategy, seed):
        _compare(grid_5x5, seed, strategy, dt=1e-3)

    @pytest.mark.parametrize("ratio", ["20:20", "20:30"])
    def test_slower_uavs(self, grid_5x5, ratio):
        _compare(grid_5x5, 11, "bidirectional", dt=1e-3, speeds=SpeedConfig.parse(ratio))

    def test_triangle_fixture(self, triangle):
        from ugv_uav_planner.engine import GroundTruth, SimConfig
        from ugv_uav_planner.strategies import BidirectionalStrategy

        truth = GroundTruth.from_edge_ids(triangle, {(1, 2): 0.5})
        stepped = step_simulate(triangle, truth, BidirectionalStrategy(), SimConfig(0, 2, 2), dt=1e-3)
        engine = run(triangle, truth, BidirectionalStrategy(), SimConfig(0, 2, 2))
        assert [e.kind for e in stepped.events] == [e.kind for e in engine.events]
        assert stepped.travel_time == pytest.approx(engine.travel_time, abs=1e-2)

    def test_events_land_on_the_step_grid(self, single_edge):
        from ugv_uav_planner.engine import GroundTruth, SimConfig
        from ugv_uav_planner.strategies import UgvOnly

        dt = 0.003
        stepped = step_simulate(single_edge, GroundTruth({}), UgvOnly(), SimConfig(0, 0, 1), dt=dt)
        steps = stepped.travel_time / dt
        assert steps == pytest.approx(round(steps), abs=1e-6)
        assert 5.0 <= stepped.travel_time + 1e-9 < 5.0 + dt + 1e-9


@pytest.mark.slow
class TestEngineMatchesStepperFine:
    @pytest.mark.parametrize("seed", range(50))
    @pytest.mark.parametrize("strategy", ["ugv-only", "bidirectional", "multi-bidirectional:3"])
    def test_grid(self, strategy, seed):
        _compare(jittered_grid(), seed, strategy, dt=1e-4)
