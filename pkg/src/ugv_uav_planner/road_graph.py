"""Road network, edge-status overlay and deterministic path queries.

Every query breaks ties by the lexicographically smallest vertex sequence, so
identical belief states always give identical answers.
"""
import hashlib
import heapq
import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path as FilePath
from typing import Any, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import ValidationError

from .config import GraphDocument
from .errors import GraphFormatError, StatusTransitionError

logger = logging.getLogger(__name__)

VertexId = int
EdgeId = Tuple[int, int]

# Arc weights of the virtual node standing for a mid-edge origin.
VIRTUAL_SOURCE = -1

DEFAULT_CHORD_TOLERANCE = 1e-6
_POSITION_EPS = 1e-9


def edge_key(u: int, v: int) -> EdgeId:
    """Canonical (low, high) id of the undirected edge between u and v."""
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def distance_to(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def lerp(self, other: "Point2D", t: float) -> "Point2D":
        return Point2D(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)


@dataclass(frozen=True)
class Edge:
    id: EdgeId
    length: float

    @property
    def u(self) -> int:
        return self.id[0]

    @property
    def v(self) -> int:
        return self.id[1]

    def other(self, vertex: int) -> int:
        if vertex == self.u:
            return self.v
        if vertex == self.v:
            return self.u
        raise ValueError(f"Vertex {vertex} is not an endpoint of edge {self.id}")

    def fraction_of(self, vertex: int) -> float:
        """Fraction coordinate of an endpoint, measured from the canonical low endpoint."""
        return 0.0 if vertex == self.u else 1.0


@dataclass(frozen=True)
class AtVertex:
    vertex: int


@dataclass(frozen=True)
class OnEdge:
    """Interior point of an edge; fraction is measured from the canonical low endpoint."""

    edge: EdgeId
    fraction: float
    heading: int

    def __post_init__(self) -> None:
        if not 0.0 < self.fraction < 1.0:
            raise ValueError(f"Edge fraction must be strictly interior, got {self.fraction}")
        if self.heading not in self.edge:
            raise ValueError(f"Heading {self.heading} is not an endpoint of {self.edge}")


GraphPosition = Union[AtVertex, OnEdge]


class RoadNetwork:
    """Immutable undirected road graph with planar coordinates.

    Edges are stored sorted by canonical id; internally they are addressed by
    their index in that order. Adjacency lists are sorted by neighbor id.
    """

    def __init__(self, points: Sequence[Point2D], edges: Sequence[Edge]):
        self._points: Tuple[Point2D, ...] = tuple(points)
        self._edges: Tuple[Edge, ...] = tuple(sorted(edges, key=lambda e: e.id))
        self._index: Dict[EdgeId, int] = {e.id: i for i, e in enumerate(self._edges)}
        adjacency: List[List[Tuple[int, int]]] = [[] for _ in self._points]
        for i, edge in enumerate(self._edges):
            adjacency[edge.u].append((edge.v, i))
            adjacency[edge.v].append((edge.u, i))
        self._adjacency = tuple(tuple(sorted(a)) for a in adjacency)
        self._hash: Optional[str] = None

    @property
    def vertex_count(self) -> int:
        return len(self._points)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def points(self) -> Tuple[Point2D, ...]:
        return self._points

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self._edges

    def point(self, vertex: int) -> Point2D:
        return self._points[vertex]

    def edge(self, index: int) -> Edge:
        return self._edges[index]

    def edge_index(self, edge_id: EdgeId) -> int:
        return self._index[edge_key(*edge_id)]

    def edge_between(self, u: int, v: int) -> Optional[int]:
        return self._index.get(edge_key(u, v))

    def neighbors(self, vertex: int) -> Tuple[Tuple[int, int], ...]:
        """(neighbor, edge index) pairs sorted by neighbor id."""
        return self._adjacency[vertex]

    def degree(self, vertex: int) -> int:
        return len(self._adjacency[vertex])

    def chord(self, index: int) -> float:
        edge = self._edges[index]
        return self._points[edge.u].distance_to(self._points[edge.v])

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        for vertex, point in enumerate(self._points):
            graph.add_node(vertex, x=point.x, y=point.y)
        for index, edge in enumerate(self._edges):
            graph.add_edge(edge.u, edge.v, length=edge.length, index=index)
        return graph

    def content_hash(self) -> str:
        """SHA-256 of the canonical graph document."""
        if self._hash is None:
            payload = json.dumps(dump_network(self), sort_keys=True, separators=(",", ":"))
            self._hash = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        return self._hash

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RoadNetwork):
            return NotImplemented
        return self is other or self.content_hash() == other.content_hash()

    def __hash__(self) -> int:
        return hash(self.content_hash())

    def __repr__(self) -> str:
        return f"RoadNetwork(|V|={self.vertex_count}, |E|={self.edge_count})"


def load_network(
    document: Union[str, bytes, Mapping[str, Any], GraphDocument],
    chord_tolerance: float = DEFAULT_CHORD_TOLERANCE,
) -> RoadNetwork:
    """Validate a graph document and build a RoadNetwork.

    Raises GraphFormatError on parse failure, non-dense ids, self loops,
    parallel edges, nonpositive lengths, chord violations or a disconnected graph.
    """
    try:
        if isinstance(document, GraphDocument):
            doc = document
        elif isinstance(document, (str, bytes)):
            doc = GraphDocument.model_validate_json(document)
        else:
            doc = GraphDocument.model_validate(document)
    except ValidationError as e:
        raise GraphFormatError(f"parse failure: {e}") from e

    if not doc.vertices:
        raise GraphFormatError("graph has no vertices")
    ordered = sorted(doc.vertices, key=lambda rec: rec.id)
    if [rec.id for rec in ordered] != list(range(len(ordered))):
        raise GraphFormatError("vertices must be densely numbered 0..n-1")
    points = [Point2D(rec.x, rec.y) for rec in ordered]

    edges: Dict[EdgeId, Edge] = {}
    for rec in doc.edges:
        if rec.u >= len(points) or rec.v >= len(points):
            raise GraphFormatError(f"edge ({rec.u}, {rec.v}) references an unknown vertex")
        if rec.u == rec.v:
            raise GraphFormatError(f"self loop at vertex {rec.u}")
        key = edge_key(rec.u, rec.v)
        if key in edges:
            raise GraphFormatError(f"duplicate/parallel edge {key}")
        if rec.length <= 0:
            raise GraphFormatError(f"nonpositive length {rec.length} on edge {key}")
        chord = points[rec.u].distance_to(points[rec.v])
        if rec.length < chord - (chord_tolerance * chord + 1e-9):
            raise GraphFormatError(
                f"chord violation on edge {key}: length {rec.length} shorter than chord {chord:.6f}"
            )
        edges[key] = Edge(key, float(rec.length))

    network = RoadNetwork(points, list(edges.values()))
    if not nx.is_connected(network.to_networkx()):
        raise GraphFormatError("graph is disconnected")
    logger.debug("Loaded %r", network)
    return network


def load_network_file(path: Union[str, FilePath], chord_tolerance: float = DEFAULT_CHORD_TOLERANCE) -> RoadNetwork:
    return load_network(FilePath(path).read_text(encoding="utf-8"), chord_tolerance)


def dump_network(network: RoadNetwork) -> Dict[str, Any]:
    return {
        "vertices": [{"id": i, "x": p.x, "y": p.y} for i, p in enumerate(network.points)],
        "edges": [{"u": e.u, "v": e.v, "length": e.length} for e in network.edges],
    }


def save_network(network: RoadNetwork, path: Union[str, FilePath]) -> None:
    FilePath(path).write_text(json.dumps(dump_network(network), indent=1) + "\n", encoding="utf-8")


def from_networkx(graph: nx.Graph, x: str = "x", y: str = "y", length: str = "length") -> RoadNetwork:
    """Import a coordinate-annotated networkx graph (e.g. a converted city map).

    Node labels are densified in sorted order; a missing length attribute
    defaults to the straight chord between the endpoints.
    """
    nodes = sorted(graph.nodes)
    ids = {node: i for i, node in enumerate(nodes)}
    vertices = []
    for node in nodes:
        data = graph.nodes[node]
        if x not in data or y not in data:
            raise GraphFormatError(f"node {node!r} lacks '{x}'/'{y}' coordinates")
        vertices.append({"id": ids[node], "x": float(data[x]), "y": float(data[y])})
    edges = []
    for a, b, data in graph.edges(data=True):
        u, v = ids[a], ids[b]
        value = data.get(length)
        if value is None:
            pa, pb = vertices[u], vertices[v]
            value = math.hypot(pa["x"] - pb["x"], pa["y"] - pb["y"])
        edges.append({"u": u, "v": v, "length": float(value)})
    return load_network({"vertices": vertices, "edges": edges})


def euclidean_point(network: RoadNetwork, position: GraphPosition) -> Point2D:
    """Planar location of a graph position (straight-chord interpolation on edges)."""
    if isinstance(position, AtVertex):
        return network.point(position.vertex)
    u, v = position.edge
    return network.point(u).lerp(network.point(v), position.fraction)


class EdgeStatus(str, Enum):
    UNINSPECTED = "uninspected"
    SAFE = "safe"
    DAMAGED = "damaged"


class BeliefGraph:
    """The planners' view of the network: statuses, existence probabilities, known damage."""

    def __init__(self, network: RoadNetwork, probabilities: Optional[Sequence[float]] = None):
        self.network = network
        count = network.edge_count
        self._status: List[EdgeStatus] = [EdgeStatus.UNINSPECTED] * count
        if probabilities is None:
            self._probability = np.ones(count)
        else:
            self._probability = np.array(probabilities, dtype=float)
            if self._probability.shape != (count,):
                raise ValueError(f"Expected {count} probabilities, got {self._probability.shape}")
            if np.any(self._probability < 0.0) or np.any(self._probability > 1.0):
                raise ValueError("Existence probabilities must lie in [0, 1]")
        self._damage: Dict[int, float] = {}

    def status(self, index: int) -> EdgeStatus:
        return self._status[index]

    def is_uninspected(self, index: int) -> bool:
        return self._status[index] is EdgeStatus.UNINSPECTED

    def is_passable(self, index: int) -> bool:
        return self._status[index] is not EdgeStatus.DAMAGED

    def probability(self, index: int) -> float:
        status = self._status[index]
        if status is EdgeStatus.SAFE:
            return 1.0
        if status is EdgeStatus.DAMAGED:
            return 0.0
        return float(self._probability[index])

    def probabilities(self) -> np.ndarray:
        """Per-edge existence probabilities with terminal statuses applied."""
        values = self._probability.copy()
        for index, status in enumerate(self._status):
            if status is EdgeStatus.SAFE:
                values[index] = 1.0
            elif status is EdgeStatus.DAMAGED:
                values[index] = 0.0
        return values

    def known_damage(self, index: int) -> Optional[float]:
        """Discovered damage fraction (from the canonical low endpoint), if any."""
        return self._damage.get(index)

    @property
    def damaged_edges(self) -> FrozenSet[int]:
        return frozenset(self._damage)

    def inspected_count(self) -> int:
        return sum(1 for s in self._status if s is not EdgeStatus.UNINSPECTED)

    def mark_safe(self, index: int) -> bool:
        """Mark an edge Safe; returns True when the status changed."""
        current = self._status[index]
        if current is EdgeStatus.SAFE:
            return False
        if current is EdgeStatus.DAMAGED:
            logger.warning("Rejected Damaged -> Safe on edge %s", self.network.edge(index).id)
            raise StatusTransitionError(f"edge {self.network.edge(index).id} is Damaged; cannot become Safe")
        self._status[index] = EdgeStatus.SAFE
        return True

    def mark_damaged(self, index: int, fraction: float) -> bool:
        """Mark an edge Damaged at a discovered fraction; returns True when the status changed."""
        current = self._status[index]
        if current is EdgeStatus.DAMAGED:
            return False
        if current is EdgeStatus.SAFE:
            logger.warning("Rejected Safe -> Damaged on edge %s", self.network.edge(index).id)
            raise StatusTransitionError(f"edge {self.network.edge(index).id} is Safe; cannot become Damaged")
        self._status[index] = EdgeStatus.DAMAGED
        self._damage[index] = float(fraction)
        return True

    def reveal(self, damaged: Mapping[int, float]) -> None:
        """Perfect knowledge: every edge becomes Safe or Damaged per the given damage map."""
        for index in range(self.network.edge_count):
            if index in damaged:
                self.mark_damaged(index, damaged[index])
            else:
                self.mark_safe(index)

    def copy(self) -> "BeliefGraph":
        other = BeliefGraph.__new__(BeliefGraph)
        other.network = self.network
        other._status = list(self._status)
        other._probability = self._probability.copy()
        other._damage = dict(self._damage)
        return other


@dataclass(frozen=True)
class Path:
    """A simple path; lead_in is the partial-edge distance from a mid-edge origin to vertices[0]."""

    vertices: Tuple[int, ...]
    total_length: float
    lead_in: float = 0.0

    @property
    def destination(self) -> int:
        return self.vertices[-1]

    def edge_indices(self, network: RoadNetwork) -> List[int]:
        """Edge indices along the path, in travel order (lead-in edge excluded)."""
        indices = []
        for a, b in zip(self.vertices, self.vertices[1:]):
            index = network.edge_between(a, b)
            if index is None:
                raise ValueError(f"No edge between {a} and {b}")
            indices.append(index)
        return indices


def origin_access(belief: BeliefGraph, origin: OnEdge) -> List[Tuple[int, float]]:
    """Endpoints reachable from a mid-edge origin and their access distances.

    Crossing a discovered damage point is forbidden; a damage point at the
    origin itself leaves only the heading endpoint open.
    """
    network = belief.network
    index = network.edge_index(origin.edge)
    edge = network.edge(index)
    t = origin.fraction
    damage = belief.known_damage(index)
    access = []
    for vertex, target, cost in ((edge.u, 0.0, t * edge.length), (edge.v, 1.0, (1.0 - t) * edge.length)):
        if damage is not None:
            if abs(damage - t) <= _POSITION_EPS:
                if vertex != origin.heading:
                    continue
            elif min(t, target) < damage < max(t, target):
                continue
        access.append((vertex, cost))
    return sorted(access)


class _SearchView:
    """Arc view of one query: passable edges, optional presence mask, origin arcs."""

    def __init__(self, belief: BeliefGraph, origin: Union[GraphPosition, int], present: Optional[Sequence[bool]] = None):
        network = belief.network
        self.network = network
        self.blocked = [
            not belief.is_passable(i) or (present is not None and not present[i])
            for i in range(network.edge_count)
        ]
        if isinstance(origin, int):
            origin = AtVertex(origin)
        if isinstance(origin, AtVertex):
            self.source = origin.vertex
            self.access: Dict[int, float] = {}
        else:
            self.source = VIRTUAL_SOURCE
            self.access = dict(origin_access(belief, origin))
            # Both endpoints are reached through the access arcs; the edge itself
            # would only lead back across the origin.
            self.blocked[network.edge_index(origin.edge)] = True

    def arcs(self, node: int) -> Iterator[Tuple[int, float]]:
        if node == VIRTUAL_SOURCE:
            yield from sorted(self.access.items())
            return
        for neighbor, index in self.network.neighbors(node):
            if not self.blocked[index]:
                yield neighbor, self.network.edge(index).length

    def weight(self, a: int, b: int) -> float:
        if a == VIRTUAL_SOURCE:
            return self.access[b]
        index = self.network.edge_between(a, b)
        assert index is not None
        return self.network.edge(index).length

    def cost(self, seq: Sequence[int]) -> float:
        total = 0.0
        for a, b in zip(seq, seq[1:]):
            total += self.weight(a, b)
        return total

    def to_path(self, dist: float, seq: Tuple[int, ...]) -> Path:
        if seq[0] == VIRTUAL_SOURCE:
            return Path(vertices=seq[1:], total_length=dist, lead_in=self.access[seq[1]])
        return Path(vertices=seq, total_length=dist)


def _dijkstra(
    view: _SearchView,
    source: int,
    target: int,
    removed_nodes: FrozenSet[int] = frozenset(),
    removed_arcs: FrozenSet[Tuple[int, int]] = frozenset(),
) -> Optional[Tuple[float, Tuple[int, ...]]]:
    # Heap entries carry the full vertex sequence so equal distances pop in
    # lexicographic order; shortest-path prefixes keep that order optimal.
    heap: List[Tuple[float, Tuple[int, ...]]] = [(0.0, (source,))]
    best: Dict[int, float] = {source: 0.0}
    settled = set()
    while heap:
        dist, seq = heapq.heappop(heap)
        node = seq[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == target:
            return dist, seq
        for neighbor, weight in view.arcs(node):
            if neighbor in settled or neighbor in removed_nodes or (node, neighbor) in removed_arcs:
                continue
            candidate = dist + weight
            if candidate > best.get(neighbor, math.inf):
                continue
            best[neighbor] = candidate
            heapq.heappush(heap, (candidate, seq + (neighbor,)))
    return None


def shortest_path(
    belief: BeliefGraph,
    origin: Union[GraphPosition, int],
    target: int,
    present: Optional[Sequence[bool]] = None,
) -> Optional[Path]:
    """Minimum-length path over non-Damaged (and, with a mask, present) edges, or None."""
    view = _SearchView(belief, origin, present)
    found = _dijkstra(view, view.source, target)
    if found is None:
        return None
    return view.to_path(*found)


def k_shortest_paths(
    belief: BeliefGraph,
    origin: Union[GraphPosition, int],
    target: int,
    k: int,
    present: Optional[Sequence[bool]] = None,
) -> List[Path]:
    """Yen's k loopless shortest paths in nondecreasing length, lexicographic ties."""
    if k < 1:
        raise ValueError("k must be >= 1")
    view = _SearchView(belief, origin, present)
    first = _dijkstra(view, view.source, target)
    if first is None:
        return []
    found = [first]
    seen = {first[1]}
    candidates: List[Tuple[float, Tuple[int, ...]]] = []
    while len(found) < k:
        _, last = found[-1]
        for i in range(len(last) - 1):
            root = last[: i + 1]
            removed_arcs = frozenset((p[i], p[i + 1]) for _, p in found if p[: i + 1] == root)
            spur = _dijkstra(view, last[i], target, frozenset(root[:-1]), removed_arcs)
            if spur is None:
                continue
            seq = root[:-1] + spur[1]
            if seq in seen:
                continue
            seen.add(seq)
            heapq.heappush(candidates, (view.cost(seq), seq))
        if not candidates:
            break
        found.append(heapq.heappop(candidates))
    return [view.to_path(dist, seq) for dist, seq in found]
