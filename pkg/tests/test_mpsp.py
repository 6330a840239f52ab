"""Tests for most probable shortest path selection."""
import math
import sys
import os

import numpy as np
import pytest

# Add src to path so we can import the module
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from ugv_uav_planner.mpsp import (
    CandidateSet,
    estimate_sp_probability,
    exact_sp_probabilities,
    generate_candidates,
    least_probable_uninspected,
    mpsp_path,
    rank_candidates,
    sample_world,
    sp_estimate,
)
from ugv_uav_planner.road_graph import BeliefGraph, Path, k_shortest_paths
from ugv_uav_planner.scenario import make_generator
from tests.conftest import make_network, random_connected_graph


@pytest.fixture
def belief(two_route, two_route_probabilities):
    return BeliefGraph(two_route, two_route_probabilities)


@pytest.fixture
def three_routes():
    """Routes 0-1-3 (length 2), 0-2-3 (length 2.5) and 0-3 (length 4)."""
    network = make_network(
        [(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (2.0, 0.0)],
        [(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.25), (2, 3, 1.25), (0, 3, 4.0)],
    )
    probabilities = [0.0] * network.edge_count
    for pair in ((0, 1), (1, 3), (0, 2), (2, 3)):
        probabilities[network.edge_between(*pair)] = 0.7
    probabilities[network.edge_between(0, 3)] = 0.8
    return BeliefGraph(network, probabilities)


class TestSampleWorld:
    def test_certain_edges(self, two_route):
        rng = make_generator(0, 9)
        assert sample_world(BeliefGraph(two_route, [1.0, 1.0, 1.0]), rng).present.all()
        assert not sample_world(BeliefGraph(two_route, [0.0, 0.0, 0.0]), rng).present.any()

    def test_terminal_statuses(self, two_route):
        belief = BeliefGraph(two_route, [0.0, 1.0, 0.5])
        belief.mark_safe(0)
        belief.mark_damaged(1, 0.5)
        rng = make_generator(1, 9)
        for _ in range(20):
            present = sample_world(belief, rng).present
            assert present[0] and not present[1]

    def test_frequency(self, two_route):
        belief = BeliefGraph(two_route, [0.5, 0.5, 0.5])
        rng = make_generator(2, 9)
        counts = np.zeros(3)
        for _ in range(10_000):
            counts += sample_world(belief, rng).present
        assert np.all(np.abs(counts / 10_000 - 0.5) < 0.02)


class TestCandidates:
    def test_deterministic_graph_has_one_candidate(self, two_route):
        candidates = generate_candidates(BeliefGraph(two_route), 0, 2, 20, make_generator(0, 9))
        assert [p.vertices for p in candidates.paths] == [(0, 1, 2)]

    def test_two_route_candidates(self, belief):
        candidates = generate_candidates(belief, 0, 2, 200, make_generator(3, 9))
        assert [p.vertices for p in candidates.paths] == [(0, 1, 2), (0, 2)]
        assert [p.total_length for p in candidates.paths] == [2.0, 3.0]

    def test_rejects_nonpositive_m(self, belief):
        with pytest.raises(ValueError):
            generate_candidates(belief, 0, 2, 0, make_generator(0, 9))


class TestSpProbability:
    """Karp-Luby estimates against exhaustive world enumeration."""

    def _candidates(self, belief, k):
        return CandidateSet(tuple(k_shortest_paths(belief, 0, belief.network.vertex_count - 1, k)))

    def test_exact_two_route(self, belief):
        candidates = self._candidates(belief, 2)
        assert exact_sp_probabilities(candidates, belief) == pytest.approx([0.81, 0.114], abs=1e-12)

    def test_shortest_candidate_is_exact(self, belief):
        estimate = sp_estimate(self._candidates(belief, 2), 0, belief, 10, make_generator(0, 9))
        assert estimate.probability == pytest.approx(0.81, abs=1e-12)
        assert estimate.standard_error == 0.0

    def test_second_route(self, belief):
        candidates = self._candidates(belief, 2)
        value = estimate_sp_probability(candidates, 1, belief, 10_000, make_generator(4, 9))
        assert value == pytest.approx(0.114, abs=0.02)

    def test_matches_enumeration_within_standard_errors(self, three_routes):
        candidates = self._candidates(three_routes, 3)
        assert [p.vertices for p in candidates.paths] == [(0, 1, 3), (0, 2, 3), (0, 3)]
        exact = exact_sp_probabilities(candidates, three_routes)
        assert exact[2] == pytest.approx(0.8 * (1 - 0.7399), abs=1e-12)
        estimate = sp_estimate(candidates, 2, three_routes, 10_000, make_generator(5, 9))
        assert estimate.standard_error > 0.0
        assert abs(estimate.probability - exact[2]) <= 4 * estimate.standard_error

    def test_coverage_over_seeds(self, three_routes):
        candidates = self._candidates(three_routes, 3)
        exact = exact_sp_probabilities(candidates, three_routes)[2]
        covered = 0
        for seed in range(100):
            estimate = sp_estimate(candidates, 2, three_routes, 10_000, make_generator(seed, 9))
            if abs(estimate.probability - exact) <= 3 * estimate.standard_error + 1e-12:
                covered += 1
        assert covered >= 95

    def test_two_route_estimate_is_exact(self, belief):
        candidates = self._candidates(belief, 2)
        for seed in range(10):
            estimate = sp_estimate(candidates, 1, belief, 1000, make_generator(seed, 9))
            assert estimate.probability == pytest.approx(0.114, abs=1e-12)

    def test_superset_candidate_is_zero(self, belief):
        shorter = Path((0, 1, 2), 2.0)
        superset = Path((0, 1, 2, 0), 5.0)
        estimate = sp_estimate(CandidateSet((shorter, superset)), 1, belief, 500, make_generator(6, 9))
        assert estimate.probability == 0.0

    def test_index_out_of_range(self, belief):
        with pytest.raises(IndexError):
            sp_estimate(self._candidates(belief, 2), 2, belief, 10, make_generator(0, 9))

    def test_rank_candidates(self, belief):
        ranked = rank_candidates(belief, 0, 2, 200, 1000, make_generator(7, 9))
        assert len(ranked.estimates) == len(ranked)
        assert ranked.probabilities[0] == pytest.approx(0.81)


class TestMpspPath:
    def test_two_route_prefers_route_a(self, belief):
        for seed in range(5):
            path = mpsp_path(belief, 0, 2, 50, 1000, make_generator(seed, 9))
            assert path.vertices == (0, 1, 2)

    def test_certain_graph_gives_shortest_path(self, square):
        path = mpsp_path(BeliefGraph(square), 0, 2, 10, 100, make_generator(0, 9))
        assert path.vertices == (0, 1, 2)

    def test_unreachable(self, single_edge):
        belief = BeliefGraph(single_edge)
        belief.mark_damaged(0, 0.5)
        assert mpsp_path(belief, 0, 1, 10, 100, make_generator(0, 9)) is None

    def test_no_sampled_world_falls_back_to_belief_path(self, single_edge):
        # p = 0 keeps the edge out of every sampled world, but it is still Uninspected.
        belief = BeliefGraph(single_edge, [0.0])
        assert len(generate_candidates(belief, 0, 1, 1, make_generator(0, 9))) == 0
        path = mpsp_path(belief, 0, 1, 1, 100, make_generator(0, 9))
        assert path is not None
        assert path.vertices == (0, 1)

    def test_fallback_takes_belief_shortest_path(self, two_route):
        belief = BeliefGraph(two_route, [0.0, 0.0, 0.0])
        for seed in range(5):
            assert mpsp_path(belief, 0, 2, 1, 100, make_generator(seed, 9)).vertices == (0, 1, 2)


class TestLeastProbableUninspected:
    def setup_method(self):
        self.network = make_network([(0, 0), (1, 0), (2, 0), (3, 0)], [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
        self.path = Path((0, 1, 2, 3), 3.0)

    def test_first_minimum(self):
        belief = BeliefGraph(self.network, [0.9, 0.6, 0.6])
        assert least_probable_uninspected(self.path, belief) == 1

    def test_all_safe(self):
        belief = BeliefGraph(self.network, [0.9, 0.6, 0.6])
        for index in range(3):
            belief.mark_safe(index)
        assert least_probable_uninspected(self.path, belief) is None

    def test_mixed(self):
        belief = BeliefGraph(self.network, [0.5, 0.8, 1.0])
        belief.mark_safe(0)
        belief.mark_safe(2)
        assert least_probable_uninspected(self.path, belief) == 1


class TestSpProbabilityMass:
    """SP-probabilities of distinct candidates are disjoint events."""

    @pytest.mark.parametrize("seed", range(40))
    def test_estimates_sum_to_at_most_one(self, seed):
        network = random_connected_graph(seed, n=7, extra=5)
        rng = make_generator(seed, 11)
        belief = BeliefGraph(network, 0.6 + 0.4 * rng.random(network.edge_count))
        ranked = rank_candidates(belief, 0, network.vertex_count - 1, 30, 2000, rng)
        spread = math.sqrt(sum(e.standard_error ** 2 for e in ranked.estimates))
        assert sum(ranked.probabilities) <= 1.0 + 4 * spread + 0.01

    @pytest.mark.parametrize("seed", range(40))
    def test_exact_probabilities_sum_to_at_most_one(self, seed):
        network = random_connected_graph(seed, n=7, extra=5)
        rng = make_generator(seed, 11)
        belief = BeliefGraph(network, 0.6 + 0.4 * rng.random(network.edge_count))
        candidates = CandidateSet(tuple(k_shortest_paths(belief, 0, network.vertex_count - 1, 6)))
        exact = exact_sp_probabilities(candidates, belief)
        assert all(value >= 0.0 for value in exact)
        assert sum(exact) <= 1.0 + 1e-12
