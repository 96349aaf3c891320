import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..errors import ConfigurationError
from ..Geometry.torus import Coord, Square, TorusGeometry
from ..Models.small_world_graph import SmallWorldGraph
from ..utilities import ensure_parent_dir, write_json

logger = logging.getLogger(__name__)

NEVER = -1


@dataclass
class ContagionTrace:
    geom: TorusGeometry
    k: int
    seeds: np.ndarray
    infected_round: np.ndarray  # round of infection per node, NEVER if not infected
    frontier_sizes: List[int] = field(default_factory=list)
    rounds_elapsed: int = 0
    covered: bool = False
    max_rounds: int = 0

    @property
    def infected_count(self) -> int:
        return int(np.count_nonzero(self.infected_round >= 0))

    @property
    def coverage(self) -> float:
        return self.infected_count / self.geom.n

    def rounds_to_full(self) -> Optional[int]:
        return rounds_to_full(self)

    def infected_by(self, t: int) -> np.ndarray:
        return (self.infected_round >= 0) & (self.infected_round <= t)

    def cumulative_infected(self) -> List[int]:
        """Infected count at the end of every round, round 0 included."""
        return np.cumsum([len(self.seeds)] + list(self.frontier_sizes)).tolist()

    def summary(self) -> dict:
        return {"covered": bool(self.covered), "rounds": int(self.rounds_elapsed),
                "frontier_sizes": [int(s) for s in self.frontier_sizes]}

    def to_frame(self) -> pd.DataFrame:
        x, y = self.geom.coords_of(np.arange(self.geom.n))
        rounds = pd.array(np.where(self.infected_round >= 0, self.infected_round, 0), dtype="Int64")
        rounds[self.infected_round < 0] = pd.NA
        return pd.DataFrame({"node_x": x, "node_y": y, "infected_round": rounds})

    def save_csv(self, path: str) -> None:
        ensure_parent_dir(path)
        self.to_frame().to_csv(path, index=False)

    def save_summary(self, path: str) -> None:
        write_json(self.summary(), path)


def default_max_rounds(geom: TorusGeometry) -> int:
    return 4 * geom.side


def _gather(indptr: np.ndarray, values: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Concatenation of values[indptr[r]:indptr[r + 1]] over rows, without a Python loop."""
    starts = indptr[rows]
    lengths = indptr[rows + 1] - starts
    total = int(lengths.sum())
    if total == 0:
        return values[:0]
    offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
    return values[offsets + np.arange(total)]


def run_contagion(graph: SmallWorldGraph, k: int, seeds, max_rounds: Optional[int] = None) -> ContagionTrace:
    """
    Round-synchronous k-complex contagion.

    Every node keeps a counter of infected influence sources (with multiplicity). Newly infected nodes of
    round t bump the counters of their dependents; a node whose counter reaches k is infected in round
    t + 1. Only nodes touched by the current frontier can cross the threshold, so the total work is
    proportional to the number of influence edges.

    Args:
        graph (SmallWorldGraph): The graph to spread on.
        k (int): Threshold, >= 1.
        seeds: Node ids infected at round 0.
        max_rounds (int): Round cap, defaults to 4 * L.
    Returns:
        ContagionTrace: The full infection record.
    """
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    seeds = np.unique(np.asarray(seeds, dtype=np.int64))
    if seeds.size == 0:
        raise ConfigurationError("The seed set must not be empty")
    n = graph.n
    if seeds[0] < 0 or seeds[-1] >= n:
        raise ConfigurationError(f"Seed ids must lie in [0, {n})")
    if max_rounds is None:
        max_rounds = default_max_rounds(graph.geom)
    if max_rounds < 0:
        raise ConfigurationError(f"max_rounds must be >= 0, got {max_rounds}")

    indptr, dependents = graph.reverse_index
    infected_round = np.full(n, NEVER, dtype=np.int64)
    infected_round[seeds] = 0
    counts = np.zeros(n, dtype=np.int64)
    frontier = seeds
    infected_total = int(seeds.size)
    frontier_sizes = []
    t = 0
    while infected_total < n and t < max_rounds:
        hits = _gather(indptr, dependents, frontier)
        counts += np.bincount(hits, minlength=n)
        touched = np.unique(hits)
        frontier = touched[(counts[touched] >= k) & (infected_round[touched] == NEVER)]
        if frontier.size == 0:
            logger.debug("Cascade stalled after %d rounds with %d/%d infected", t, infected_total, n)
            break
        t += 1
        infected_round[frontier] = t
        infected_total += int(frontier.size)
        frontier_sizes.append(int(frontier.size))

    return ContagionTrace(geom=graph.geom, k=k, seeds=seeds, infected_round=infected_round,
                          frontier_sizes=frontier_sizes, rounds_elapsed=t,
                          covered=infected_total == n, max_rounds=max_rounds)


def rounds_to_full(trace: ContagionTrace) -> Optional[int]:
    """Rounds to full infection, or None when the cascade did not cover the graph."""
    return trace.rounds_elapsed if trace.covered else None


@lru_cache(maxsize=None)
def fixed_polyominoes(size: int) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
    """All fixed (translation-distinct, rotations counted apart) polyominoes of the given size."""
    shapes = {frozenset({(0, 0)})}
    for _ in range(size - 1):
        grown = set()
        for shape in shapes:
            for x, y in shape:
                for cell in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                    if cell in shape:
                        continue
                    cells = shape | {cell}
                    mx = min(c[0] for c in cells)
                    my = min(c[1] for c in cells)
                    grown.add(frozenset((cx - mx, cy - my) for cx, cy in cells))
        shapes = grown
    return tuple(sorted(tuple(sorted(shape)) for shape in shapes))


def cluster_shapes(k: int):
    if k <= 4:
        return fixed_polyominoes(k)
    horizontal = tuple((i, 0) for i in range(k))
    vertical = tuple((0, i) for i in range(k))
    return (horizontal, vertical)


def detect_new_seed_cluster(trace: ContagionTrace, region: Square, k: int, deadline_round: int):
    """
    Earliest round at which k grid-connected nodes inside region are all infected.

    Scans every placement of every candidate shape (straight runs, plus all polyominoes when k <= 4) that
    fits inside region without wrapping around the region's own edge.

    Returns:
        tuple or None: (cluster coords, round) with round <= deadline_round, else None.
    """
    geom = trace.geom
    if region.side > geom.side or region.side < 1:
        raise ConfigurationError(f"Region side {region.side} does not fit a torus of side {geom.side}")
    s = region.side
    grid = trace.infected_round[region.node_grid(geom)]
    sentinel = np.iinfo(np.int64).max
    grid = np.where(grid >= 0, grid, sentinel)

    best = None
    for shape in cluster_shapes(k):
        w = max(c[0] for c in shape) + 1
        h = max(c[1] for c in shape) + 1
        if w > s or h > s:
            continue
        window = np.full((s - w + 1, s - h + 1), 0, dtype=np.int64)
        for cx, cy in shape:
            np.maximum(window, grid[cx:cx + s - w + 1, cy:cy + s - h + 1], out=window)
        pos = int(np.argmin(window))
        value = int(window.flat[pos])
        if best is None or value < best[0]:
            i, j = divmod(pos, window.shape[1])
            best = (value, shape, i, j)

    if best is None or best[0] == sentinel or best[0] > deadline_round:
        return None
    value, shape, i, j = best
    L = geom.side
    cluster = [Coord((region.origin.x + i + cx) % L, (region.origin.y + j + cy) % L) for cx, cy in shape]
    return cluster, value


def rounds_lower_envelope(trace: ContagionTrace) -> List[int]:
    return trace.cumulative_infected()
