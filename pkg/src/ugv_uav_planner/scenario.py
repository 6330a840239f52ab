"""Seeded instance generation and instance documents.

Randomness comes from numpy's counter-based Philox generator seeded through
``SeedSequence(entropy=seed, spawn_key=(stream, ...))``. Each edge draws from
its own substream keyed by its (u, v) id, so edge order never shifts draws.
"""
import logging
from pathlib import Path as FilePath
from typing import Iterable, List, Optional, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from .config import SpeedConfig
from .engine import GroundTruth, SimConfig
from .errors import ConfigurationError, InstanceValidationError
from .road_graph import RoadNetwork, edge_key, from_networkx

logger = logging.getLogger(__name__)

VERTEX_STREAM = 0
EDGE_STREAM = 1
STRATEGY_STREAM = 2

MIN_PROBABILITY = 0.6
MAX_PROBABILITY = 1.0
FRACTION_MARGIN = 1e-6


def make_generator(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for one named substream of a run seed."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(sequence))


class InstanceEdge(BaseModel):
    u: int = Field(ge=0)
    v: int = Field(ge=0)
    p: float = Field(ge=0.0, le=1.0)
    damaged: bool
    fraction: Optional[float] = None

    @model_validator(mode="after")
    def _fraction_matches_damage(self) -> "InstanceEdge":
        if self.damaged:
            if self.fraction is None or not 0.0 < self.fraction < 1.0:
                raise ValueError(f"damaged edge ({self.u}, {self.v}) needs a fraction in (0, 1)")
        elif self.fraction is not None:
            raise ValueError(f"undamaged edge ({self.u}, {self.v}) must not carry a fraction")
        return self


class InstanceSpec(BaseModel):
    """One problem instance; the same instance drives every strategy in a comparison."""

    seed: int = Field(ge=0, lt=2**64)
    ugv_start: int = Field(ge=0)
    uav_start: int = Field(ge=0)
    destination: int = Field(ge=0)
    edges: List[InstanceEdge]

    @model_validator(mode="after")
    def _distinct_endpoints(self) -> "InstanceSpec":
        if self.ugv_start == self.destination:
            raise ValueError("ugv_start and destination must differ")
        return self

    def validate_against(self, network: RoadNetwork) -> None:
        n = network.vertex_count
        for name in ("ugv_start", "uav_start", "destination"):
            if getattr(self, name) >= n:
                raise InstanceValidationError(f"{name} {getattr(self, name)} outside the network")
        seen = set()
        for record in self.edges:
            key = edge_key(record.u, record.v)
            if network.edge_between(*key) is None:
                raise InstanceValidationError(f"instance references unknown edge {key}")
            if key in seen:
                raise InstanceValidationError(f"instance lists edge {key} twice")
            seen.add(key)
        if len(seen) != network.edge_count:
            raise InstanceValidationError(f"instance covers {len(seen)} of {network.edge_count} edges")

    def _by_index(self, network: RoadNetwork) -> List[InstanceEdge]:
        records: List[Optional[InstanceEdge]] = [None] * network.edge_count
        for record in self.edges:
            index = network.edge_between(record.u, record.v)
            if index is None:
                raise InstanceValidationError(f"instance references unknown edge ({record.u}, {record.v})")
            records[index] = record
        if any(r is None for r in records):
            raise InstanceValidationError("instance does not cover every network edge")
        return records  # type: ignore[return-value]

    def probabilities(self, network: RoadNetwork) -> List[float]:
        return [r.p for r in self._by_index(network)]

    def ground_truth(self, network: RoadNetwork) -> GroundTruth:
        """Damage fractions re-expressed from the canonical low endpoint."""
        damaged = {}
        for index, record in enumerate(self._by_index(network)):
            if record.damaged:
                assert record.fraction is not None
                low_first = record.u < record.v
                damaged[index] = record.fraction if low_first else 1.0 - record.fraction
        return GroundTruth(damaged)

    def sim_config(self, network: RoadNetwork, speeds: SpeedConfig) -> SimConfig:
        return SimConfig(
            ugv_start=self.ugv_start,
            uav_start=self.uav_start,
            destination=self.destination,
            ugv_speed=speeds.v_g,
            uav_speed=speeds.v_a,
            seed=self.seed,
            probabilities=self.probabilities(network),
        )


def generate_instance(network: RoadNetwork, seed: int) -> InstanceSpec:
    """Sample probabilities, damage and start/destination vertices from a seed."""
    n = network.vertex_count
    if n < 2:
        raise ValueError("instances need at least two vertices")
    vertices = make_generator(seed, VERTEX_STREAM)
    ugv_start = int(vertices.integers(n))
    destination = int(vertices.integers(n - 1))
    if destination >= ugv_start:
        destination += 1
    uav_start = int(vertices.integers(n))

    edges = []
    for edge in network.edges:
        draws = make_generator(seed, EDGE_STREAM, edge.u, edge.v)
        p = MIN_PROBABILITY + (MAX_PROBABILITY - MIN_PROBABILITY) * float(draws.random())
        damaged = bool(draws.random() > p)
        fraction = float(np.clip(draws.random(), FRACTION_MARGIN, 1.0 - FRACTION_MARGIN)) if damaged else None
        edges.append(InstanceEdge(u=edge.u, v=edge.v, p=p, damaged=damaged, fraction=fraction))
    spec = InstanceSpec(seed=seed, ugv_start=ugv_start, uav_start=uav_start, destination=destination, edges=edges)
    logger.debug("Generated instance seed=%d with %d damaged edges", seed, sum(e.damaged for e in edges))
    return spec


def generate_instances(network: RoadNetwork, seeds: Iterable[int]) -> List[InstanceSpec]:
    return [generate_instance(network, seed) for seed in seeds]


def save_instance(spec: InstanceSpec, path: Union[str, FilePath]) -> None:
    FilePath(path).write_text(spec.model_dump_json(indent=1) + "\n", encoding="utf-8")


def load_instance(path: Union[str, FilePath], network: Optional[RoadNetwork] = None) -> InstanceSpec:
    """Read an instance document; with a network, also check it refers to that network."""
    try:
        spec = InstanceSpec.model_validate_json(FilePath(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise InstanceValidationError(f"schema mismatch in {path}: {e}") from e
    if network is not None:
        spec.validate_against(network)
    return spec


def synthetic_grid(rows: int, cols: int, spacing: float = 1.0) -> RoadNetwork:
    """rows x cols lattice; vertex r*cols + c sits at (c*spacing, r*spacing)."""
    if rows < 2 or cols < 2:
        raise ConfigurationError("grid needs at least 2 rows and 2 columns")
    if spacing <= 0:
        raise ConfigurationError("grid spacing must be positive")
    graph = nx.grid_2d_graph(rows, cols)
    for r, c in graph.nodes:
        graph.nodes[(r, c)]["x"] = c * spacing
        graph.nodes[(r, c)]["y"] = r * spacing
    nx.set_edge_attributes(graph, float(spacing), "length")
    return from_networkx(graph)
