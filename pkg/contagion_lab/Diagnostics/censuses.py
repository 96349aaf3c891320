import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import networkx as nx
import numpy as np

from ..Dynamics.contagion_engine import ContagionTrace
from ..Dynamics.infection_dag import long_tie_threshold
from ..errors import ConfigurationError, UnsupportedError
from ..Geometry.torus import Coord, TorusGeometry
from ..Models.small_world_graph import SmallWorldGraph
from ..utilities import ceil_power, snapped_power

logger = logging.getLogger(__name__)

DEFAULT_INNER_FACTOR = 2
SUPPORTED_HEAVY_K = (2, 3)
MIN_CHECKED_BLOCKS = 4


def _check_delta(delta: float) -> None:
    if not 0 < delta < 0.5:
        raise ConfigurationError(f"delta must lie in (0, 1/2), got {delta}")


@dataclass
class WideBridgeCensus:
    z1: int
    z2: int
    disk_radius: int
    inner_radius: int
    annulus_bridges: List[int] = field(default_factory=list)
    disk_bridges: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def wide_bridge_census(graph: SmallWorldGraph, center: Coord, delta: float, k: int,
                       inner_factor: float = DEFAULT_INNER_FACTOR) -> WideBridgeCensus:
    """
    Count the wide bridges into the disk D of radius ceil(n^delta) around center.

    A wide bridge is a node issuing at least k weak ties into D. Z1 counts them in the annulus
    ceil(inner_factor * n^delta) < d <= L and Z2 in the closed disk d <= ceil(inner_factor * n^delta),
    D itself included.

    Args:
        graph (SmallWorldGraph): The graph to scan.
        center (Coord): Center of D, normally the seed cluster.
        delta (float): Radius exponent, in (0, 1/2).
        k (int): Ties needed to make a bridge.
        inner_factor (float): Multiplier of n^delta for the inner radius.
    Returns:
        WideBridgeCensus: (z1, z2) plus the radii used and the bridge node ids.
    """
    _check_delta(delta)
    n = graph.n
    disk_radius = ceil_power(n, delta)
    inner_radius = int(np.ceil(inner_factor * snapped_power(n, delta)))
    dist = graph.geom.distances_from(center)
    in_disk = dist <= disk_radius
    into_disk = in_disk[graph.weak].sum(axis=1)
    bridges = into_disk >= k
    annulus = (dist > inner_radius) & (dist <= graph.side)
    near = dist <= inner_radius
    return WideBridgeCensus(
        z1=int(np.count_nonzero(bridges & annulus)),
        z2=int(np.count_nonzero(bridges & near)),
        disk_radius=disk_radius,
        inner_radius=inner_radius,
        annulus_bridges=np.flatnonzero(bridges & annulus).tolist(),
        disk_bridges=np.flatnonzero(bridges & near).tolist(),
    )


@dataclass
class BlockCensus:
    violating_nodes: List[int]
    threshold: float
    block_side: int
    blocks_per_axis: int
    adjacency_checked: bool = False
    adjacency_passed: Optional[bool] = None
    first_jump: Optional[dict] = None

    @property
    def any(self) -> bool:
        return bool(self.violating_nodes)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["any"] = self.any
        return data


def blocks_for(L: int, reach: float) -> int:
    """Blocks per axis when every block must span at least reach nodes: floor(L / ceil(reach))."""
    return max(1, L // max(1, int(np.ceil(reach))))


def balanced_blocks(geom: TorusGeometry, count: int) -> np.ndarray:
    """
    Flattened block index (bj * count + bi) of every node on a count x count grid of near-equal blocks.

    Coordinate x falls in block x * count // L, so block spans differ by at most one node.
    """
    x, y = geom.coords_of(np.arange(geom.n))
    L = geom.side
    return (y * count // L) * count + x * count // L


def long_tie_block_census(graph: SmallWorldGraph, delta: float, k: int,
                          trace: Optional[ContagionTrace] = None) -> BlockCensus:
    """
    List every node owning at least k weak ties longer than n^(1/2 - delta).

    With no such node, each newly infected node has an infected source within max(n^(1/2 - delta),
    strong radius), so on a grid of blocks at least that wide the infection only ever enters blocks
    adjacent to already touched ones. When a trace is given and the list is empty, that is checked round
    by round. Below MIN_CHECKED_BLOCKS blocks per axis every block neighbours every other one and the check
    is skipped.
    """
    _check_delta(delta)
    L = graph.side
    threshold = snapped_power(graph.n, 0.5 - delta)
    long_counts = (graph.weak_lengths > threshold).sum(axis=1)
    violating = np.flatnonzero(long_counts >= k).tolist()
    nb = blocks_for(L, max(threshold, graph.radius))
    census = BlockCensus(violating_nodes=violating, threshold=threshold, block_side=L // nb, blocks_per_axis=nb)
    if trace is None or violating:
        return census
    if nb < MIN_CHECKED_BLOCKS:
        logger.debug("Only %d blocks per axis on a torus of side %d, skipping the spread check", nb, L)
        return census

    rounds = trace.infected_round
    blocks = balanced_blocks(graph.geom, nb)
    touched = np.zeros(nb * nb, dtype=bool)
    touched[blocks[rounds == 0]] = True
    census.adjacency_checked = True
    census.adjacency_passed = True
    for t in range(1, trace.rounds_elapsed + 1):
        reached = np.unique(blocks[rounds == t])
        for b in reached[~touched[reached]].tolist():
            bj, bi = divmod(b, nb)
            neighbors = [((bj + dj) % nb) * nb + (bi + di) % nb for di in (-1, 0, 1) for dj in (-1, 0, 1)]
            if not touched[neighbors].any():
                census.adjacency_passed = False
                census.first_jump = {"round": t, "block": [bi, bj]}
                logger.warning("Infection jumped to non-adjacent block %s at round %d", (bi, bj), t)
                return census
        touched[reached] = True
    return census


@dataclass
class HeavySubsetWitness:
    nodes: List[int]
    long_ties: int
    coords: List[Coord]

    def to_dict(self) -> dict:
        return {"nodes": self.nodes, "long_ties": self.long_ties, "coords": [list(c) for c in self.coords]}


def heavy_connected_subset_search(graph: SmallWorldGraph, k: int, epsilon: float) -> Optional[HeavySubsetWitness]:
    """
    Exact search for a connected set of at most k^2 - k + 1 nodes touching at least C(k + 1, 2) long ties.

    Connectivity is taken in the undirected union of strong and weak ties. Sets grow one neighbor at a time
    from every node incident to a long tie. A node without long ties is only added when a long-tie node is
    still reachable from it inside the remaining size budget, which keeps every inclusion-minimal witness
    reachable. Only k in {2, 3} is supported.

    Returns:
        HeavySubsetWitness or None: the first witness found, seeds taken in ascending id order.
    """
    if k not in SUPPORTED_HEAVY_K:
        raise UnsupportedError(f"Heavy subset search supports k in {SUPPORTED_HEAVY_K}, got {k}")
    size_bound = k * k - k + 1
    needed = k * (k + 1) // 2
    threshold = long_tie_threshold(graph.n, epsilon)
    owners, targets, _, _ = graph.long_ties(threshold)
    if owners.size == 0:
        return None

    incident = {}
    for tie, (u, v) in enumerate(zip(owners.tolist(), targets.tolist())):
        incident.setdefault(u, set()).add(tie)
        incident.setdefault(v, set()).add(tie)
    heavy = sorted(incident)
    max_degree = max(len(ties) for ties in incident.values())

    view = graph.to_networkx()
    to_heavy = nx.multi_source_dijkstra_path_length(view, heavy, cutoff=size_bound - 1)
    seen = set()

    def ties_of(nodes):
        found = set()
        for u in nodes:
            found |= incident.get(u, set())
        return len(found)

    def grow(nodes: frozenset):
        if nodes in seen:
            return None
        seen.add(nodes)
        count = ties_of(nodes)
        if count >= needed:
            return nodes
        budget = size_bound - len(nodes)
        if budget == 0 or count + budget * max_degree < needed:
            return None
        frontier = set()
        for u in nodes:
            frontier.update(view.adj[u])
        frontier -= nodes
        for w in sorted(frontier):
            if w not in incident and to_heavy.get(w, size_bound) > budget - 1:
                continue
            found = grow(nodes | {w})
            if found is not None:
                return found
        return None

    for u in heavy:
        found = grow(frozenset([u]))
        if found is not None:
            nodes = sorted(found)
            logger.info("Found a heavy connected subset of %d nodes", len(nodes))
            return HeavySubsetWitness(nodes=nodes, long_ties=ties_of(found),
                                      coords=[graph.geom.coord(v) for v in nodes])
    return None
