"""Replanning strategies: each find_path returns the UGV plan and UAV edge assignments."""
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .config import StrategyConfig
from .criticality import CriticalityCache, CriticalityTable, criticality_table, most_critical_uninspected
from .engine import Simulation, UavState, vehicle_point
from .errors import ConfigurationError
from .mpsp import least_probable_uninspected, mpsp_path
from .road_graph import BeliefGraph, Path, RoadNetwork, k_shortest_paths, shortest_path
from .scenario import STRATEGY_STREAM, make_generator

logger = logging.getLogger(__name__)

Assignment = Optional[Tuple[int, int]]


class StrategyKind(str, Enum):
    PERFECT_KNOWLEDGE = "perfect"
    UGV_ONLY = "ugv-only"
    KEMENY = "kemeny"
    K_SHORTEST_PATHS = "k-shortest"
    MPSP = "mpsp"
    BIDIRECTIONAL = "bidirectional"
    MULTI_UAV_BIDIRECTIONAL = "multi-bidirectional"


@dataclass(frozen=True)
class PlanAssignment:
    ugv_plan: Optional[Path]
    uav_assignments: Tuple[Assignment, ...] = ()


def nearer_endpoint(network: RoadNetwork, uav: UavState, index: int) -> Tuple[int, int]:
    """(entry, exit) with the entry at the endpoint closer to the UAV; ties take the lower id."""
    edge = network.edge(index)
    here = vehicle_point(network, uav.position)
    if here.distance_to(network.point(edge.v)) < here.distance_to(network.point(edge.u)):
        return edge.v, edge.u
    return edge.u, edge.v


def reverse_scan(path: Path, belief: BeliefGraph, allocated: Iterable[int] = ()) -> Assignment:
    """First Uninspected, unallocated edge walking the path back from its destination."""
    taken = set(allocated)
    vertices = path.vertices
    for i in range(len(vertices) - 1, 0, -1):
        index = belief.network.edge_between(vertices[i], vertices[i - 1])
        assert index is not None
        if belief.is_uninspected(index) and index not in taken:
            return vertices[i], vertices[i - 1]
    return None


class Strategy:
    """Base class: holds the config and path helpers; subclasses implement find_path."""

    kind = StrategyKind.UGV_ONLY
    uav_count = 0

    def __init__(self, config: Optional[StrategyConfig] = None):
        self.config = config or StrategyConfig(name=self.kind.value)

    @property
    def label(self) -> str:
        return self.config.label

    def prepare(self, sim: Simulation) -> None:
        """Per-run setup before the first find_path call."""

    def find_path(self, sim: Simulation) -> PlanAssignment:
        raise NotImplementedError

    def ugv_path(self, sim: Simulation) -> Optional[Path]:
        return shortest_path(sim.belief, sim.ugv.position, sim.destination)

    def idle(self, plan: Optional[Path]) -> PlanAssignment:
        return PlanAssignment(plan, (None,) * self.uav_count)


class PerfectKnowledge(Strategy):
    """Lower bound: all damage is known up front, the UGV drives the shortest safe path."""

    kind = StrategyKind.PERFECT_KNOWLEDGE

    def prepare(self, sim: Simulation) -> None:
        sim.belief.reveal(sim.truth.damaged)

    def find_path(self, sim: Simulation) -> PlanAssignment:
        return self.idle(self.ugv_path(sim))


class UgvOnly(Strategy):
    kind = StrategyKind.UGV_ONLY

    def find_path(self, sim: Simulation) -> PlanAssignment:
        return self.idle(self.ugv_path(sim))


class SingleUavStrategy(Strategy):
    uav_count = 1

    def pick_edge(self, sim: Simulation, plan: Path) -> Optional[int]:
        raise NotImplementedError

    def plan(self, sim: Simulation) -> Optional[Path]:
        return self.ugv_path(sim)

    def find_path(self, sim: Simulation) -> PlanAssignment:
        plan = self.plan(sim)
        if plan is None:
            return self.idle(None)
        index = self.pick_edge(sim, plan)
        if index is None:
            return self.idle(plan)
        return PlanAssignment(plan, (nearer_endpoint(sim.network, sim.uavs[0], index),))


class KemenyStrategy(SingleUavStrategy):
    """UAV inspects the path edge whose removal raises the Kemeny constant most."""

    kind = StrategyKind.KEMENY

    def __init__(self, config: Optional[StrategyConfig] = None, cache: Optional[CriticalityCache] = None):
        super().__init__(config)
        self.cache = cache
        self.table: Optional[CriticalityTable] = None

    def prepare(self, sim: Simulation) -> None:
        self.table = criticality_table(sim.network, self.config.weighting, self.cache)

    def pick_edge(self, sim: Simulation, plan: Path) -> Optional[int]:
        assert self.table is not None
        return most_critical_uninspected(self.table, plan, sim.belief)


class KShortestPathsStrategy(SingleUavStrategy):
    """UAV inspects the UGV path edge that recurs most across the k shortest paths."""

    kind = StrategyKind.K_SHORTEST_PATHS

    def pick_edge(self, sim: Simulation, plan: Path) -> Optional[int]:
        paths = k_shortest_paths(sim.belief, sim.ugv.position, sim.destination, self.config.k)
        counts: Counter = Counter()
        for path in paths:
            counts.update(path.edge_indices(sim.network))
        best: Optional[int] = None
        best_count = 0
        for index in plan.edge_indices(sim.network):
            if sim.belief.is_uninspected(index) and counts[index] > best_count:
                best, best_count = index, counts[index]
        return best


class MpspStrategy(SingleUavStrategy):
    """UGV follows the most probable shortest path; UAV checks its least likely edge."""

    kind = StrategyKind.MPSP

    def prepare(self, sim: Simulation) -> None:
        self.rng = make_generator(sim.config.seed, STRATEGY_STREAM)

    def plan(self, sim: Simulation) -> Optional[Path]:
        return mpsp_path(
            sim.belief, sim.ugv.position, sim.destination, self.config.m, self.config.mc_runs, self.rng
        )

    def pick_edge(self, sim: Simulation, plan: Path) -> Optional[int]:
        return least_probable_uninspected(plan, sim.belief)


class BidirectionalStrategy(Strategy):
    """UAV inspects the UGV path backwards from the destination."""

    kind = StrategyKind.BIDIRECTIONAL
    uav_count = 1

    def find_path(self, sim: Simulation) -> PlanAssignment:
        plan = self.ugv_path(sim)
        if plan is None:
            return self.idle(None)
        return PlanAssignment(plan, (reverse_scan(plan, sim.belief),))


class MultiUavBidirectionalStrategy(Strategy):
    """Each UAV walks one of the k shortest paths backwards; no edge gets two UAVs."""

    kind = StrategyKind.MULTI_UAV_BIDIRECTIONAL

    def __init__(self, config: Optional[StrategyConfig] = None):
        super().__init__(config)
        self.uav_count = self.config.uavs

    def find_path(self, sim: Simulation) -> PlanAssignment:
        paths = k_shortest_paths(sim.belief, sim.ugv.position, sim.destination, self.uav_count)
        if not paths:
            return self.idle(None)
        return PlanAssignment(paths[0], tuple(allocate_reverse_scans(paths, sim.belief, self.uav_count)))


def allocate_reverse_scans(paths: Sequence[Path], belief: BeliefGraph, uav_count: int) -> List[Assignment]:
    """UAV i starts from path i (cyclically) and falls through to the other paths."""
    allocated: Set[int] = set()
    result: List[Assignment] = []
    for i in range(uav_count):
        pair: Assignment = None
        for offset in range(len(paths)):
            pair = reverse_scan(paths[(i + offset) % len(paths)], belief, allocated)
            if pair is not None:
                break
        if pair is not None:
            index = belief.network.edge_between(*pair)
            assert index is not None
            allocated.add(index)
        result.append(pair)
    return result


_STRATEGIES = {
    StrategyKind.PERFECT_KNOWLEDGE: PerfectKnowledge,
    StrategyKind.UGV_ONLY: UgvOnly,
    StrategyKind.K_SHORTEST_PATHS: KShortestPathsStrategy,
    StrategyKind.MPSP: MpspStrategy,
    StrategyKind.BIDIRECTIONAL: BidirectionalStrategy,
    StrategyKind.MULTI_UAV_BIDIRECTIONAL: MultiUavBidirectionalStrategy,
}


def make_strategy(config: StrategyConfig, cache: Optional[CriticalityCache] = None) -> Strategy:
    """Build a strategy from its configuration."""
    try:
        kind = StrategyKind(config.name)
    except ValueError as e:
        raise ConfigurationError(f"Unknown strategy '{config.name}'") from e
    if kind is StrategyKind.KEMENY:
        return KemenyStrategy(config, cache)
    return _STRATEGIES[kind](config)
