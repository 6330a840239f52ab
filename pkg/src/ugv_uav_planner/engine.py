"""Event-driven simulation of one UGV and its UAVs.

Each iteration asks the strategy for plans, computes every vehicle's time to
its next stop analytically, advances all vehicles by the earliest of those
times and applies the stop events that happen at that instant.
"""
import json
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path as FilePath
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .road_graph import (
    AtVertex,
    BeliefGraph,
    EdgeId,
    GraphPosition,
    OnEdge,
    Path,
    Point2D,
    RoadNetwork,
    euclidean_point,
)

logger = logging.getLogger(__name__)

_DISTANCE_EPS = 1e-9
_FRACTION_EPS = 1e-12


@dataclass(frozen=True)
class GroundTruth:
    """Hidden damage: edge index -> damage fraction from the canonical low endpoint."""

    damaged: Mapping[int, float]

    def __post_init__(self) -> None:
        for index, fraction in self.damaged.items():
            if not 0.0 < fraction < 1.0:
                raise ValueError(f"Damage fraction {fraction} on edge {index} must be strictly interior")

    @classmethod
    def from_edge_ids(cls, network: RoadNetwork, damaged: Mapping[EdgeId, float]) -> "GroundTruth":
        return cls({network.edge_index(edge_id): float(f) for edge_id, f in damaged.items()})

    def fraction(self, index: int) -> Optional[float]:
        return self.damaged.get(index)

    def damaged_ids(self, network: RoadNetwork) -> List[EdgeId]:
        return sorted(network.edge(i).id for i in self.damaged)


@dataclass(frozen=True)
class FreeFlight:
    """UAV stopped mid-deadhead: flown ``progress`` meters from ``origin`` toward vertex ``to``."""

    origin: Point2D
    to: int
    progress: float


UavPosition = Union[AtVertex, OnEdge, FreeFlight]


@dataclass
class UgvState:
    position: GraphPosition
    speed: float
    plan: Optional[Path] = None
    last_vertex: int = 0
    odometer: float = 0.0

    def __post_init__(self) -> None:
        if self.speed <= 0:
            raise ValueError("UGV speed must be positive")


@dataclass
class UavState:
    index: int
    position: UavPosition
    speed: float
    assignment: Optional[Tuple[int, int]] = None

    def __post_init__(self) -> None:
        if self.speed <= 0:
            raise ValueError("UAV speed must be positive")

    @property
    def actor(self) -> str:
        return f"uav{self.index}"


class EventKind(str, Enum):
    UGV_REACHED_DESTINATION = "UgvReachedDestination"
    UGV_HIT_DAMAGE = "UgvHitDamage"
    UAV_HIT_DAMAGE = "UavHitDamage"
    UAV_INSPECTION_COMPLETE = "UavInspectionComplete"
    NO_PATH = "NoPath"


@dataclass(frozen=True)
class Event:
    time: float
    kind: EventKind
    actor: str
    edge: Optional[EdgeId] = None
    fraction: Optional[float] = None
    position: Optional[Point2D] = None

    def to_record(self) -> Dict[str, Any]:
        return {
            "t": self.time,
            "kind": self.kind.value,
            "actor": self.actor,
            "edge": list(self.edge) if self.edge is not None else None,
            "fraction": self.fraction,
            "position": [self.position.x, self.position.y] if self.position is not None else None,
        }


@dataclass
class SimOutcome:
    travel_time: float
    computation_time: float
    reached: bool
    events: List[Event]
    edges_inspected: int
    ugv_trajectory: List[Dict[str, Any]]
    odometer: float
    replans: int

    @property
    def event_count(self) -> int:
        return len(self.events)


@dataclass
class SimConfig:
    """Per-run settings; probabilities are indexed like ``RoadNetwork.edges``."""

    ugv_start: int
    uav_start: int
    destination: int
    ugv_speed: float = 20.0
    uav_speed: float = 40.0
    seed: int = 0
    probabilities: Optional[Sequence[float]] = None
    max_iterations: Optional[int] = None


@dataclass(frozen=True)
class Leg:
    """Straight run along one edge between two fractions (canonical coordinates)."""

    edge: int
    start: float
    end: float
    length: float
    to_vertex: int
    full: bool


@dataclass(frozen=True)
class NextStop:
    time: float
    kind: Optional[EventKind]
    distance: float
    edge: Optional[int] = None
    fraction: Optional[float] = None
    leg: int = 0


IDLE = NextStop(math.inf, None, math.inf)


def vehicle_point(network: RoadNetwork, position: UavPosition) -> Point2D:
    if isinstance(position, FreeFlight):
        target = network.point(position.to)
        span = position.origin.distance_to(target)
        if span <= 0.0:
            return target
        return position.origin.lerp(target, min(1.0, position.progress / span))
    return euclidean_point(network, position)


def plan_legs(network: RoadNetwork, position: GraphPosition, plan: Path) -> List[Leg]:
    """Legs the UGV drives to execute a plan from its current position."""
    legs: List[Leg] = []
    first = plan.vertices[0]
    if isinstance(position, AtVertex):
        if position.vertex != first:
            raise ValueError(f"plan starts at {first} but the UGV is at vertex {position.vertex}")
    else:
        index = network.edge_index(position.edge)
        edge = network.edge(index)
        if first not in edge.id:
            raise ValueError(f"plan starts at {first}, not an endpoint of {edge.id}")
        target = edge.fraction_of(first)
        legs.append(Leg(index, position.fraction, target, plan.lead_in, first, full=False))
    for a, b in zip(plan.vertices, plan.vertices[1:]):
        index = network.edge_between(a, b)
        if index is None:
            raise ValueError(f"plan uses a missing edge ({a}, {b})")
        edge = network.edge(index)
        legs.append(Leg(index, edge.fraction_of(a), edge.fraction_of(b), edge.length, b, full=True))
    return legs


def _crossing(start: float, end: float, fraction: float) -> bool:
    if end > start:
        return start <= fraction < end
    return end < fraction <= start


def ugv_time_to_event(ugv: UgvState, belief: BeliefGraph, truth: GroundTruth) -> NextStop:
    """Time until the UGV reaches its destination or an undiscovered damage point."""
    if ugv.plan is None:
        raise ValueError("UGV has no plan")
    network = belief.network
    travelled = 0.0
    legs = plan_legs(network, ugv.position, ugv.plan)
    for i, leg in enumerate(legs):
        fraction = truth.fraction(leg.edge)
        if fraction is not None and belief.is_passable(leg.edge) and _crossing(leg.start, leg.end, fraction):
            distance = travelled + abs(fraction - leg.start) * network.edge(leg.edge).length
            return NextStop(distance / ugv.speed, EventKind.UGV_HIT_DAMAGE, distance, leg.edge, fraction, i)
        travelled += leg.length
    return NextStop(travelled / ugv.speed, EventKind.UGV_REACHED_DESTINATION, travelled, leg=len(legs))


def _inspection_leg(network: RoadNetwork, uav: UavState) -> Tuple[float, Leg]:
    """Deadhead distance and the inspection leg of the UAV's current assignment."""
    assert uav.assignment is not None
    entry, exit_ = uav.assignment
    index = network.edge_between(entry, exit_)
    if index is None:
        raise ValueError(f"UAV {uav.index} assigned a missing edge ({entry}, {exit_})")
    edge = network.edge(index)
    end = edge.fraction_of(exit_)
    position = uav.position
    if isinstance(position, OnEdge) and position.edge == edge.id and position.heading == exit_:
        start = position.fraction
        deadhead = 0.0
    else:
        start = edge.fraction_of(entry)
        deadhead = vehicle_point(network, position).distance_to(network.point(entry))
    return deadhead, Leg(index, start, end, abs(end - start) * edge.length, exit_, full=True)


def uav_time_to_event(uav: UavState, network: RoadNetwork, belief: BeliefGraph, truth: GroundTruth) -> NextStop:
    """Deadhead to the entry vertex, then inspect toward the exit until done or damaged."""
    if uav.assignment is None:
        return IDLE
    deadhead, leg = _inspection_leg(network, uav)
    fraction = truth.fraction(leg.edge)
    if fraction is not None and _crossing(leg.start, leg.end, fraction):
        distance = deadhead + abs(fraction - leg.start) * network.edge(leg.edge).length
        return NextStop(distance / uav.speed, EventKind.UAV_HIT_DAMAGE, distance, leg.edge, fraction)
    distance = deadhead + leg.length
    return NextStop(distance / uav.speed, EventKind.UAV_INSPECTION_COMPLETE, distance, leg.edge)


def apply_backtrack(ugv: UgvState, network: RoadNetwork) -> UgvState:
    """After hitting damage, face the last visited vertex; the return is paid by the next plan."""
    position = ugv.position
    if not isinstance(position, OnEdge):
        raise ValueError("backtrack needs the UGV stopped on an edge")
    if ugv.last_vertex not in position.edge:
        raise ValueError(f"last vertex {ugv.last_vertex} is not an endpoint of {position.edge}")
    ugv.position = OnEdge(position.edge, position.fraction, heading=ugv.last_vertex)
    ugv.plan = None
    return ugv


def _interior(fraction: float) -> float:
    return min(1.0 - _FRACTION_EPS, max(_FRACTION_EPS, fraction))


def write_event_log(events: Sequence[Event], path: Union[str, FilePath]) -> None:
    """Export events as JSON Lines records {t, kind, actor, edge, fraction, position}."""
    with open(path, "w", encoding="utf-8") as handle:
        for event in events:
            handle.write(json.dumps(event.to_record()) + "\n")


class Simulation:
    """State of one run; strategies read it and return plan assignments."""

    def __init__(self, network: RoadNetwork, truth: GroundTruth, strategy: Any, config: SimConfig):
        for vertex in (config.ugv_start, config.uav_start, config.destination):
            if not 0 <= vertex < network.vertex_count:
                raise ValueError(f"vertex {vertex} outside the network")
        self.network = network
        self.truth = truth
        self.strategy = strategy
        self.config = config
        self.destination = config.destination
        self.belief = BeliefGraph(network, config.probabilities)
        self.ugv = UgvState(AtVertex(config.ugv_start), config.ugv_speed, last_vertex=config.ugv_start)
        self.uavs = [
            UavState(i, AtVertex(config.uav_start), config.uav_speed) for i in range(strategy.uav_count)
        ]
        self.clock = 0.0
        self.travel_time = 0.0
        self.computation_time = 0.0
        self.events: List[Event] = []
        self.trajectory: List[Dict[str, Any]] = [{"vertex": config.ugv_start}]
        self.edges_inspected = 0
        self.replans = 0
        self.reached = False

    def run(self) -> SimOutcome:
        """Plan, advance to the next event, repeat until arrival or no path."""
        limit = self.config.max_iterations or 4 * self.network.edge_count + 10
        self.strategy.prepare(self)
        for _ in range(limit):
            started = time.perf_counter()
            assignment = self.strategy.find_path(self)
            self.computation_time += time.perf_counter() - started
            self.replans += 1
            self._apply_assignment(assignment)
            step, keep_going = self.find_event_and_update()
            self.travel_time += step
            if not keep_going:
                break
        else:
            raise RuntimeError(f"simulation did not terminate within {limit} iterations")
        return SimOutcome(
            travel_time=self.travel_time,
            computation_time=self.computation_time,
            reached=self.reached,
            events=list(self.events),
            edges_inspected=self.edges_inspected,
            ugv_trajectory=list(self.trajectory),
            odometer=self.ugv.odometer,
            replans=self.replans,
        )

    def _apply_assignment(self, assignment: Any) -> None:
        self.ugv.plan = assignment.ugv_plan
        assigned = list(assignment.uav_assignments) + [None] * (len(self.uavs) - len(assignment.uav_assignments))
        seen = set()
        for uav, pair in zip(self.uavs, assigned):
            if pair is not None:
                index = self.network.edge_between(*pair)
                if index is None or not self.belief.is_uninspected(index) or index in seen:
                    raise RuntimeError(f"invalid UAV assignment {pair} for {uav.actor}")
                seen.add(index)
            uav.assignment = pair
        logger.debug(
            "t=%.4f plan=%s uavs=%s",
            self.clock,
            None if self.ugv.plan is None else self.ugv.plan.vertices,
            [u.assignment for u in self.uavs],
        )

    def find_event_and_update(self) -> Tuple[float, bool]:
        """Advance every vehicle to the earliest stop; returns (step time, keep going)."""
        if self.ugv.plan is None:
            step = self._return_to_last_vertex()
            self.clock += step
            self._record(EventKind.NO_PATH, "ugv", position=euclidean_point(self.network, self.ugv.position))
            return step, False

        ugv_stop = ugv_time_to_event(self.ugv, self.belief, self.truth)
        uav_stops = [uav_time_to_event(uav, self.network, self.belief, self.truth) for uav in self.uavs]
        step = min([ugv_stop.time] + [s.time for s in uav_stops])

        ugv_event = ugv_stop.time == step
        self._advance_ugv(ugv_stop, step, ugv_event)
        uav_events = [stop.time == step for stop in uav_stops]
        for uav, stop, stopping in zip(self.uavs, uav_stops, uav_events):
            if stop.kind is not None:
                self._advance_uav(uav, stop, step, stopping)
        self.clock += step

        if ugv_event:
            self._apply_ugv_event(ugv_stop)
        for uav, stop, stopping in zip(self.uavs, uav_stops, uav_events):
            if stopping:
                self._apply_uav_event(uav, stop)
        self.reached = ugv_event and ugv_stop.kind is EventKind.UGV_REACHED_DESTINATION
        return step, not self.reached

    def _return_to_last_vertex(self) -> float:
        # No path: a UGV left mid-edge still drives back to its last vertex.
        position = self.ugv.position
        if not isinstance(position, OnEdge):
            return 0.0
        index = self.network.edge_index(position.edge)
        edge = self.network.edge(index)
        distance = abs(edge.fraction_of(self.ugv.last_vertex) - position.fraction) * edge.length
        self.ugv.odometer += distance
        self.ugv.position = AtVertex(self.ugv.last_vertex)
        self.trajectory.append({"vertex": self.ugv.last_vertex})
        return distance / self.ugv.speed

    def _complete_leg(self, leg: Leg) -> None:
        ugv = self.ugv
        # A lead-in leg covers the whole edge only when it continues away from the entry vertex.
        if leg.full or leg.to_vertex != ugv.last_vertex:
            if self.belief.mark_safe(leg.edge):
                logger.debug("UGV traversed edge %s", self.network.edge(leg.edge).id)
        ugv.last_vertex = leg.to_vertex
        ugv.position = AtVertex(leg.to_vertex)
        self.trajectory.append({"vertex": leg.to_vertex})

    def _advance_ugv(self, stop: NextStop, step: float, stopping: bool) -> None:
        ugv = self.ugv
        assert ugv.plan is not None
        legs = plan_legs(self.network, ugv.position, ugv.plan)
        if stopping:
            for leg in legs[: stop.leg]:
                self._complete_leg(leg)
            ugv.odometer += stop.distance
            if stop.kind is EventKind.UGV_HIT_DAMAGE:
                leg = legs[stop.leg]
                assert stop.fraction is not None
                ugv.position = OnEdge(self.network.edge(leg.edge).id, stop.fraction, heading=leg.to_vertex)
            return
        distance = min(step * ugv.speed, stop.distance)
        ugv.odometer += distance
        remaining = distance
        for leg in legs:
            if remaining >= leg.length - _DISTANCE_EPS:
                remaining -= leg.length
                self._complete_leg(leg)
                continue
            if remaining > _DISTANCE_EPS:
                edge = self.network.edge(leg.edge)
                sign = 1.0 if leg.end > leg.start else -1.0
                fraction = _interior(leg.start + sign * remaining / edge.length)
                ugv.position = OnEdge(edge.id, fraction, heading=leg.to_vertex)
                self.trajectory.append({"edge": list(edge.id), "fraction": fraction})
            break

    def _apply_ugv_event(self, stop: NextStop) -> None:
        ugv = self.ugv
        if stop.kind is EventKind.UGV_HIT_DAMAGE:
            assert stop.edge is not None and stop.fraction is not None
            edge = self.network.edge(stop.edge)
            self.belief.mark_damaged(stop.edge, stop.fraction)
            apply_backtrack(ugv, self.network)
            self.trajectory.append({"edge": list(edge.id), "fraction": stop.fraction})
            self._record(
                EventKind.UGV_HIT_DAMAGE, "ugv", edge.id, stop.fraction, euclidean_point(self.network, ugv.position)
            )
        else:
            ugv.plan = None
            self._record(EventKind.UGV_REACHED_DESTINATION, "ugv", position=euclidean_point(self.network, ugv.position))

    def _advance_uav(self, uav: UavState, stop: NextStop, step: float, stopping: bool) -> None:
        deadhead, leg = _inspection_leg(self.network, uav)
        edge = self.network.edge(leg.edge)
        assert uav.assignment is not None
        entry, exit_ = uav.assignment
        if stopping:
            if stop.kind is EventKind.UAV_HIT_DAMAGE:
                assert stop.fraction is not None
                uav.position = OnEdge(edge.id, stop.fraction, heading=exit_)
            else:
                uav.position = AtVertex(exit_)
            return
        distance = min(step * uav.speed, stop.distance)
        if distance < deadhead - _DISTANCE_EPS:
            uav.position = FreeFlight(vehicle_point(self.network, uav.position), entry, distance)
            return
        along = max(0.0, distance - deadhead)
        if along <= _DISTANCE_EPS and leg.start == edge.fraction_of(entry):
            uav.position = AtVertex(entry)
            return
        sign = 1.0 if leg.end > leg.start else -1.0
        uav.position = OnEdge(edge.id, _interior(leg.start + sign * along / edge.length), heading=exit_)

    def _apply_uav_event(self, uav: UavState, stop: NextStop) -> None:
        assert stop.edge is not None
        edge = self.network.edge(stop.edge)
        point = vehicle_point(self.network, uav.position)
        if stop.kind is EventKind.UAV_HIT_DAMAGE:
            assert stop.fraction is not None
            if self.belief.mark_damaged(stop.edge, stop.fraction):
                self.edges_inspected += 1
            self._record(EventKind.UAV_HIT_DAMAGE, uav.actor, edge.id, stop.fraction, point)
        else:
            if self.belief.is_passable(stop.edge) and self.belief.mark_safe(stop.edge):
                self.edges_inspected += 1
            self._record(EventKind.UAV_INSPECTION_COMPLETE, uav.actor, edge.id, None, point)
        uav.assignment = None

    def _record(
        self,
        kind: EventKind,
        actor: str,
        edge: Optional[EdgeId] = None,
        fraction: Optional[float] = None,
        position: Optional[Point2D] = None,
    ) -> None:
        event = Event(self.clock, kind, actor, edge, fraction, position)
        logger.debug("event %s", event.to_record())
        self.events.append(event)


def run(network: RoadNetwork, ground_truth: GroundTruth, strategy: Any, config: SimConfig) -> SimOutcome:
    """Simulate one strategy on one instance until arrival or no path."""
    return Simulation(network, ground_truth, strategy, config).run()
