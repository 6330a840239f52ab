"""Edge criticality: the Kemeny constant of the graph with one edge removed.

The Kemeny constant of the random walk with transition matrix P is
trace(Z) - 1 where Z = (I - P + 1 pi^T)^-1 is the fundamental matrix.
"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path as FilePath
from typing import List, Optional, Tuple, Union

import networkx as nx
import numpy as np
from scipy import linalg
from scipy.sparse.csgraph import connected_components

from .errors import DisconnectedGraphError
from .road_graph import BeliefGraph, Path, RoadNetwork

logger = logging.getLogger(__name__)

WEIGHTINGS = ("uniform", "inverse-length")


def _weights(graph: Union[RoadNetwork, nx.Graph], weighting: str) -> np.ndarray:
    if weighting not in WEIGHTINGS:
        raise ValueError(f"Unknown weighting '{weighting}'")
    if isinstance(graph, RoadNetwork):
        n = graph.vertex_count
        triples = [(e.u, e.v, e.length) for e in graph.edges]
    else:
        ids = {node: i for i, node in enumerate(sorted(graph.nodes))}
        n = len(ids)
        triples = [(ids[a], ids[b], float(d.get("length", 1.0))) for a, b, d in graph.edges(data=True)]
    weights = np.zeros((n, n))
    for u, v, length in triples:
        w = 1.0 if weighting == "uniform" else 1.0 / length
        weights[u, v] = weights[v, u] = w
    return weights


def _require_connected(weights: np.ndarray) -> None:
    if weights.shape[0] < 2:
        raise DisconnectedGraphError("Kemeny constant needs at least two vertices")
    count, _ = connected_components(weights, directed=False)
    if count != 1:
        raise DisconnectedGraphError(f"graph has {count} connected components")


def _kemeny_solve(weights: np.ndarray) -> float:
    degrees = weights.sum(axis=1)
    transition = weights / degrees[:, None]
    stationary = degrees / degrees.sum()
    n = len(degrees)
    system = np.eye(n) - transition + np.outer(np.ones(n), stationary)
    fundamental = linalg.solve(system, np.eye(n))
    return float(np.trace(fundamental) - 1.0)


def _kemeny_eigen(weights: np.ndarray) -> float:
    # D^-1/2 W D^-1/2 is symmetric and similar to P.
    inv_sqrt = 1.0 / np.sqrt(weights.sum(axis=1))
    symmetric = weights * inv_sqrt[:, None] * inv_sqrt[None, :]
    eigenvalues = np.linalg.eigvalsh(symmetric)[:-1]
    return float(np.sum(1.0 / (1.0 - eigenvalues)))


def kemeny_constant(
    graph: Union[RoadNetwork, nx.Graph],
    weighting: str = "uniform",
    method: str = "solve",
) -> float:
    """Kemeny constant of the random walk on a connected graph with >= 2 vertices.

    ``method`` is "solve" (fundamental matrix) or "eigen" (sum over the
    non-unit eigenvalues of the transition matrix).
    """
    weights = _weights(graph, weighting)
    _require_connected(weights)
    if method == "solve":
        return _kemeny_solve(weights)
    if method == "eigen":
        return _kemeny_eigen(weights)
    raise ValueError(f"Unknown method '{method}'")


def kemeny_constant_eigen(graph: Union[RoadNetwork, nx.Graph], weighting: str = "uniform") -> float:
    return kemeny_constant(graph, weighting, method="eigen")


@dataclass(frozen=True)
class CriticalityTable:
    """Per-edge criticality indexed like ``RoadNetwork.edges``; +inf marks bridges."""

    values: Tuple[float, ...]
    weighting: str = "uniform"

    def __getitem__(self, index: int) -> float:
        return self.values[index]

    def __len__(self) -> int:
        return len(self.values)


def edge_criticalities(network: RoadNetwork, weighting: str = "uniform", jobs: int = 1) -> CriticalityTable:
    """Kemeny constant after removing each edge; +inf when the removal disconnects."""
    weights = _weights(network, weighting)
    bridges = {tuple(sorted(b)) for b in nx.bridges(network.to_networkx())}

    def criticality(index: int) -> float:
        edge = network.edge(index)
        if edge.id in bridges:
            return math.inf
        reduced = weights.copy()
        reduced[edge.u, edge.v] = reduced[edge.v, edge.u] = 0.0
        return _kemeny_solve(reduced)

    indices = range(network.edge_count)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            values = list(executor.map(criticality, indices))
    else:
        values = [criticality(i) for i in indices]
    logger.debug("Computed %d criticalities (%d bridges)", len(values), len(bridges))
    return CriticalityTable(tuple(values), weighting)


def most_critical_uninspected(table: CriticalityTable, path: Path, belief: BeliefGraph) -> Optional[int]:
    """Edge index of the first Uninspected path edge with maximal criticality, or None."""
    best: Optional[int] = None
    best_value = -math.inf
    for index in path.edge_indices(belief.network):
        if not belief.is_uninspected(index):
            continue
        value = table[index]
        if best is None or value > best_value:
            best, best_value = index, value
    return best


class CriticalityCache:
    """Criticality tables persisted as JSON, keyed by graph content hash and weighting."""

    def __init__(self, directory: Union[str, FilePath]):
        self.directory = FilePath(directory)

    def path_for(self, network: RoadNetwork, weighting: str) -> FilePath:
        return self.directory / f"{network.content_hash()}-{weighting}.json"

    def load(self, network: RoadNetwork, weighting: str = "uniform") -> Optional[CriticalityTable]:
        path = self.path_for(network, weighting)
        if not path.exists():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        values: List[Optional[float]] = data["values"]
        if data.get("graph_hash") != network.content_hash() or len(values) != network.edge_count:
            logger.warning("Ignoring stale criticality cache %s", path)
            return None
        logger.debug("Criticality cache hit %s", path)
        return CriticalityTable(tuple(math.inf if v is None else float(v) for v in values), weighting)

    def store(self, network: RoadNetwork, table: CriticalityTable) -> FilePath:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(network, table.weighting)
        payload = {
            "graph_hash": network.content_hash(),
            "weighting": table.weighting,
            "values": [None if math.isinf(v) else v for v in table.values],
        }
        path.write_text(json.dumps(payload) + "\n", encoding="utf-8")
        return path

    def get(self, network: RoadNetwork, weighting: str = "uniform", jobs: int = 1) -> CriticalityTable:
        table = self.load(network, weighting)
        if table is None:
            table = edge_criticalities(network, weighting, jobs)
            self.store(network, table)
        return table


# Tables kept in memory per process, for the most recently used graphs.
TABLE_MEMO_SIZE = 8


@lru_cache(maxsize=TABLE_MEMO_SIZE)
def _memoized_table(network: RoadNetwork, weighting: str, directory: Optional[str]) -> CriticalityTable:
    if directory is None:
        return edge_criticalities(network, weighting)
    return CriticalityCache(directory).get(network, weighting)


def criticality_table(
    network: RoadNetwork,
    weighting: str = "uniform",
    cache: Optional[CriticalityCache] = None,
) -> CriticalityTable:
    """Criticality table for a graph, shared by every run on equal graphs in this process."""
    return _memoized_table(network, weighting, str(cache.directory) if cache is not None else None)
