"""Pytest configuration and shared road-network fixtures."""
import sys
import os

import networkx as nx
import numpy as np
import pytest

# Add src to path so we can import the module
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from ugv_uav_planner.road_graph import from_networkx, load_network


def make_network(vertices, edges, chord_tolerance=1e-6):
    """Build a RoadNetwork from [(x, y), ...] and [(u, v, length), ...]."""
    return load_network(
        {
            "vertices": [{"id": i, "x": x, "y": y} for i, (x, y) in enumerate(vertices)],
            "edges": [{"u": u, "v": v, "length": length} for u, v, length in edges],
        },
        chord_tolerance=chord_tolerance,
    )


def jittered_grid(rows=5, cols=5, spacing=10.0, seed=7):
    """Grid whose edge lengths are stretched by up to 30% so no two routes tie."""
    graph = nx.grid_2d_graph(rows, cols)
    for r, c in graph.nodes:
        graph.nodes[(r, c)]["x"] = c * spacing
        graph.nodes[(r, c)]["y"] = r * spacing
    rng = np.random.default_rng(seed)
    for a, b in sorted(graph.edges):
        graph.edges[a, b]["length"] = spacing * (1.0 + 0.3 * float(rng.random()))
    return from_networkx(graph)


def random_connected_graph(seed, n=8, extra=5):
    """Small connected graph with integer lengths at least the chord."""
    rng = np.random.default_rng(seed)
    points = [(int(rng.integers(0, 10)), int(rng.integers(0, 10))) for _ in range(n)]
    pairs = set()
    for v in range(1, n):
        pairs.add((int(rng.integers(0, v)), v))
    for _ in range(extra):
        u, v = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
        pairs.add((u, v))
    edges = []
    for u, v in sorted(pairs):
        chord = float(np.hypot(points[u][0] - points[v][0], points[u][1] - points[v][1]))
        edges.append((u, v, float(np.ceil(chord)) + float(rng.integers(1, 5))))
    return make_network(points, edges)


@pytest.fixture
def triangle():
    """s=0 (0,0), m=1 (100,0), d=2 (200,0), b=3 (100,80); the (1, 2) edge hides damage at 0.5."""
    return make_network(
        [(0.0, 0.0), (100.0, 0.0), (200.0, 0.0), (100.0, 80.0)],
        [(0, 1, 100.0), (1, 2, 100.0), (0, 3, 128.06), (2, 3, 128.06)],
        chord_tolerance=1e-4,
    )


@pytest.fixture
def two_route():
    """Route A = 0-1-2 (two edges of length 1), route B = 0-2 (length 3)."""
    return make_network(
        [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
        [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)],
    )


@pytest.fixture
def two_route_probabilities(two_route):
    # Edge order: (0, 1), (0, 2), (1, 2).
    return [0.9, 0.6, 0.9]


@pytest.fixture
def single_edge():
    return make_network([(0.0, 0.0), (100.0, 0.0)], [(0, 1, 100.0)])


@pytest.fixture
def square():
    """4-cycle a=0, b=1, c=2, d=3 with unit lengths."""
    return make_network(
        [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
        [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)],
    )


@pytest.fixture
def star():
    """Three routes out of vertex 0 toward destination 4 of lengths 240, 250 and 300."""
    return make_network(
        [(0.0, 0.0), (50.0, 50.0), (50.0, -50.0), (100.0, 0.0), (200.0, 0.0)],
        [(0, 1, 80.0), (1, 4, 160.0), (0, 2, 80.0), (2, 4, 170.0), (0, 3, 100.0), (3, 4, 200.0)],
    )


@pytest.fixture
def grid_5x5():
    return jittered_grid()
