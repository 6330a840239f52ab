"""Most probable shortest path (MPSP) over the belief graph.

Candidates come from shortest paths in sampled worlds. A candidate's
SP-probability is Pr[it exists and no shorter candidate exists], estimated
with the Karp-Luby union estimator conditioned on the candidate existing.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .road_graph import BeliefGraph, GraphPosition, Path, shortest_path

logger = logging.getLogger(__name__)

DEFAULT_CANDIDATES = 20
DEFAULT_MC_RUNS = 1000
MAX_EXACT_EDGES = 20


@dataclass(frozen=True)
class WorldSample:
    present: np.ndarray


@dataclass(frozen=True)
class SpEstimate:
    probability: float
    standard_error: float


@dataclass(frozen=True)
class CandidateSet:
    """Distinct candidate paths sorted by (length, vertices), with optional estimates."""

    paths: Tuple[Path, ...]
    estimates: Tuple[SpEstimate, ...] = ()

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def probabilities(self) -> List[float]:
        return [e.probability for e in self.estimates]


def sample_world(belief: BeliefGraph, rng: np.random.Generator) -> WorldSample:
    """Independent Bernoulli presence per edge; Safe always present, Damaged never."""
    probabilities = belief.probabilities()
    return WorldSample(rng.random(len(probabilities)) < probabilities)


def generate_candidates(
    belief: BeliefGraph,
    origin: Union[GraphPosition, int],
    target: int,
    m: int,
    rng: np.random.Generator,
) -> CandidateSet:
    if m < 1:
        raise ValueError("m must be >= 1")
    found = {}
    for _ in range(m):
        world = sample_world(belief, rng)
        path = shortest_path(belief, origin, target, present=world.present)
        if path is not None:
            found.setdefault(path.vertices, path)
    ordered = sorted(found.values(), key=lambda p: (p.total_length, p.vertices))
    return CandidateSet(tuple(ordered))


def _product(values: Sequence[float]) -> float:
    result = 1.0
    for v in values:
        result *= v
    return result


def sp_estimate(
    candidates: CandidateSet,
    j: int,
    belief: BeliefGraph,
    mc_runs: int,
    rng: np.random.Generator,
) -> SpEstimate:
    """Karp-Luby estimate of candidate j's SP-probability with its standard error."""
    paths = candidates.paths
    if not 0 <= j < len(paths):
        raise IndexError(f"candidate index {j} out of range for {len(paths)} candidates")
    network = belief.network
    p = belief.probabilities()
    edge_sets = [frozenset(path.edge_indices(network)) for path in paths[: j + 1]]
    target = edge_sets[j]
    p_target = _product([p[e] for e in sorted(target)])
    if j == 0 or p_target == 0.0:
        return SpEstimate(p_target, 0.0)

    extras = [sorted(edge_sets[i] - target) for i in range(j)]
    conditional = np.array([_product([p[e] for e in extra]) for extra in extras])
    total = float(conditional.sum())
    if total == 0.0:
        return SpEstimate(p_target, 0.0)

    relevant = sorted(set().union(*extras))
    column = {e: c for c, e in enumerate(relevant)}
    masks = np.zeros((j, len(relevant)), dtype=bool)
    for i, extra in enumerate(extras):
        masks[i, [column[e] for e in extra]] = True

    chosen = rng.choice(j, size=mc_runs, p=conditional / total)
    worlds = rng.random((mc_runs, len(relevant))) < p[relevant]
    worlds |= masks[chosen]
    exists = np.column_stack([worlds[:, masks[i]].all(axis=1) for i in range(j)])
    # A trial counts only when the chosen candidate is the first one present.
    first = np.argmax(exists, axis=1)
    hits = int(np.count_nonzero(first == chosen))
    ratio = hits / mc_runs
    union = min(1.0, total * ratio)
    error = p_target * total * math.sqrt(ratio * (1.0 - ratio) / mc_runs)
    return SpEstimate(p_target * (1.0 - union), error)


def estimate_sp_probability(
    candidates: CandidateSet,
    j: int,
    belief: BeliefGraph,
    mc_runs: int,
    rng: np.random.Generator,
) -> float:
    return sp_estimate(candidates, j, belief, mc_runs, rng).probability


def exact_sp_probabilities(candidates: CandidateSet, belief: BeliefGraph) -> List[float]:
    """SP-probabilities by enumerating every world of the uncertain candidate edges."""
    network = belief.network
    p = belief.probabilities()
    edge_sets = [frozenset(path.edge_indices(network)) for path in candidates.paths]
    uncertain = sorted(e for e in set().union(*edge_sets) if 0.0 < p[e] < 1.0) if edge_sets else []
    if len(uncertain) > MAX_EXACT_EDGES:
        raise ValueError(f"{len(uncertain)} uncertain edges exceed the exact limit {MAX_EXACT_EDGES}")
    certain_absent = {e for e in set().union(*edge_sets) if p[e] == 0.0} if edge_sets else set()
    result = [0.0] * len(edge_sets)
    for bits in itertools.product((False, True), repeat=len(uncertain)):
        weight = 1.0
        present = set()
        for e, bit in zip(uncertain, bits):
            weight *= p[e] if bit else 1.0 - p[e]
            if bit:
                present.add(e)
        for i, edges in enumerate(edge_sets):
            if all(e in present or (e not in certain_absent and e not in uncertain) for e in edges):
                result[i] += weight
                break
    return result


def rank_candidates(
    belief: BeliefGraph,
    origin: Union[GraphPosition, int],
    target: int,
    m: int,
    mc_runs: int,
    rng: np.random.Generator,
) -> CandidateSet:
    candidates = generate_candidates(belief, origin, target, m, rng)
    estimates = tuple(sp_estimate(candidates, j, belief, mc_runs, rng) for j in range(len(candidates)))
    return CandidateSet(candidates.paths, estimates)


def mpsp_path(
    belief: BeliefGraph,
    origin: Union[GraphPosition, int],
    target: int,
    m: int,
    mc_runs: int,
    rng: np.random.Generator,
) -> Optional[Path]:
    """Candidate with the highest estimated SP-probability; ties keep the shorter one.

    When no sampled world connects origin and target the belief-graph
    shortest path is returned, so None means the belief graph itself is
    disconnected.
    """
    if mc_runs < 1:
        raise ValueError("mc_runs must be >= 1")
    ranked = rank_candidates(belief, origin, target, m, mc_runs, rng)
    best: Optional[Path] = None
    best_probability = -math.inf
    for path, estimate in zip(ranked.paths, ranked.estimates):
        if estimate.probability > best_probability:
            best, best_probability = path, estimate.probability
    if best is None:
        best = shortest_path(belief, origin, target)
        if best is not None:
            logger.debug("No sampled world reached %d; falling back to %s", target, best.vertices)
        return best
    logger.debug("MPSP picked %s (p=%.4f of %d candidates)", best.vertices, best_probability, len(ranked))
    return best


def least_probable_uninspected(path: Path, belief: BeliefGraph) -> Optional[int]:
    """Edge index of the first Uninspected path edge with minimal existence probability."""
    best: Optional[int] = None
    best_probability = math.inf
    for index in path.edge_indices(belief.network):
        if not belief.is_uninspected(index):
            continue
        probability = belief.probability(index)
        if probability < best_probability:
            best, best_probability = index, probability
    return best
