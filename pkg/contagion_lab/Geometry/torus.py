import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, NamedTuple, Set, Tuple

import numpy as np

from ..errors import ConfigurationError, InvalidClusterError


class Coord(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class Square:
    """An s x s axis-aligned block of coords starting at origin, wrapping around the torus."""

    origin: Coord
    side: int

    def __len__(self) -> int:
        return self.side * self.side

    def coords(self, geom: "TorusGeometry") -> List[Coord]:
        L = geom.side
        return [
            Coord((self.origin.x + i) % L, (self.origin.y + j) % L)
            for j in range(self.side)
            for i in range(self.side)
        ]

    def node_grid(self, geom: "TorusGeometry") -> np.ndarray:
        """Node ids of the square as an (s, s) array indexed [i, j] = origin + (i, j)."""
        L = geom.side
        xs = (self.origin.x + np.arange(self.side)) % L
        ys = (self.origin.y + np.arange(self.side)) % L
        return ys[None, :] * L + xs[:, None]

    def node_ids(self, geom: "TorusGeometry") -> np.ndarray:
        return np.sort(self.node_grid(geom).ravel())

    def overlaps(self, other: "Square", geom: "TorusGeometry") -> bool:
        return bool(np.intersect1d(self.node_ids(geom), other.node_ids(geom)).size)

    def gap(self, other: "Square", geom: "TorusGeometry") -> int:
        """Smallest torus distance between a node of this square and a node of other; 0 when they overlap."""
        L = geom.side
        total = 0
        for a, b in ((self.origin.x, other.origin.x), (self.origin.y, other.origin.y)):
            offsets = b - a + np.arange(-(self.side - 1), other.side)
            total += int(_circular(offsets, L).min())
        return total


def _circular(delta, L):
    delta = np.abs(delta) % L
    return np.minimum(delta, L - delta)


@lru_cache(maxsize=None)
def displacement_table(L: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    All L*L - 1 nonzero displacement vectors of the L x L torus, sorted by circular Manhattan length.

    Args:
        L (int): Side of the torus.
    Returns:
        tuple: (dx, dy, dist, starts) where dx, dy, dist are aligned arrays sorted by dist (stable, so
        row-major order inside a distance bucket) and starts[d] is the index of the first displacement of
        length d (starts has length max_dist + 2, starts[0] = starts[1] = 0).
    """
    dy, dx = np.divmod(np.arange(1, L * L, dtype=np.int64), L)
    dist = _circular(dx, L) + _circular(dy, L)
    order = np.argsort(dist, kind="stable")
    dx, dy, dist = dx[order], dy[order], dist[order]
    max_dist = int(dist[-1])
    starts = np.searchsorted(dist, np.arange(0, max_dist + 2), side="left")
    for arr in (dx, dy, dist, starts):
        arr.setflags(write=False)
    return dx, dy, dist, starts


@lru_cache(maxsize=None)
def _histogram_counts(L: int) -> np.ndarray:
    _, _, dist, _ = displacement_table(L)
    counts = np.bincount(dist)
    counts.setflags(write=False)
    return counts


def strong_radius(m: int) -> int:
    """ceil(sqrt(m)) computed in integers."""
    if m < 1:
        raise ConfigurationError(f"m must be >= 1, got {m}")
    return math.isqrt(m - 1) + 1


@lru_cache(maxsize=None)
def strong_offsets(radius: int) -> np.ndarray:
    """Plain (unwrapped) offsets (dx, dy) with 1 <= |dx| + |dy| <= radius, row-major."""
    span = np.arange(-radius, radius + 1)
    ox, oy = np.meshgrid(span, span, indexing="xy")
    ox, oy = ox.ravel(), oy.ravel()
    keep = (np.abs(ox) + np.abs(oy) >= 1) & (np.abs(ox) + np.abs(oy) <= radius)
    offsets = np.stack([ox[keep], oy[keep]], axis=1)
    offsets.setflags(write=False)
    return offsets


class TorusGeometry:
    def __init__(self, side: int) -> None:
        if side < 2:
            raise ConfigurationError(f"Torus side must be >= 2, got {side}")
        self.side = int(side)
        self.n = self.side * self.side

    def __eq__(self, other) -> bool:
        return isinstance(other, TorusGeometry) and other.side == self.side

    def __hash__(self) -> int:
        return hash(("TorusGeometry", self.side))

    def __repr__(self) -> str:
        return f"TorusGeometry(side={self.side})"

    # Node ids are row-major: id = y * L + x.
    def node_id(self, c: Coord) -> int:
        return (c.y % self.side) * self.side + (c.x % self.side)

    def coord(self, node: int) -> Coord:
        y, x = divmod(int(node), self.side)
        return Coord(x, y)

    def coords_of(self, nodes) -> Tuple[np.ndarray, np.ndarray]:
        y, x = np.divmod(np.asarray(nodes, dtype=np.int64), self.side)
        return x, y

    def torus_distance(self, a: Coord, b: Coord) -> int:
        L = self.side
        ddx = abs(a.x - b.x) % L
        ddy = abs(a.y - b.y) % L
        return min(ddx, L - ddx) + min(ddy, L - ddy)

    def node_distances(self, u, v) -> np.ndarray:
        """Vectorized torus distance between node id arrays (broadcasting)."""
        ux, uy = self.coords_of(u)
        vx, vy = self.coords_of(v)
        return _circular(ux - vx, self.side) + _circular(uy - vy, self.side)

    def distances_from(self, center: Coord) -> np.ndarray:
        """Distance from center to every node, indexed by node id."""
        return self.node_distances(np.arange(self.n), self.node_id(center))

    def distance_histogram(self) -> Dict[int, int]:
        counts = _histogram_counts(self.side)
        return {d: int(c) for d, c in enumerate(counts) if d >= 1 and c > 0}

    def histogram_counts(self) -> np.ndarray:
        """Histogram as an array indexed by distance (entry 0 is 0)."""
        return _histogram_counts(self.side)

    def max_distance(self) -> int:
        return 2 * (self.side // 2)

    # Blocks may be ragged when block_side does not divide L.
    def blocks_per_axis(self, block_side: int) -> int:
        if not 1 <= block_side <= self.side:
            raise ConfigurationError(f"block_side must be in [1, {self.side}], got {block_side}")
        return -(-self.side // block_side)

    def block_index(self, c: Coord, block_side: int) -> Tuple[int, int]:
        self.blocks_per_axis(block_side)
        return (c.x % self.side) // block_side, (c.y % self.side) // block_side

    def adjacent_blocks(self, block: Tuple[int, int], block_side: int) -> Set[Tuple[int, int]]:
        nb = self.blocks_per_axis(block_side)
        i, j = block
        return {((i + di) % nb, (j + dj) % nb) for di in (-1, 0, 1) for dj in (-1, 0, 1)}

    def canonical_seed_cluster(self, anchor: Coord, k: int) -> List[Coord]:
        if k < 1 or k > self.side:
            raise InvalidClusterError(f"Seed cluster size must be in [1, {self.side}], got {k}")
        L = self.side
        return [Coord((anchor.x + i) % L, anchor.y % L) for i in range(k)]

    def neighbor_ids(self, nodes, offsets: np.ndarray) -> np.ndarray:
        """(len(nodes), len(offsets)) array of node ids at the given plain offsets, wrapped."""
        x, y = self.coords_of(nodes)
        nx_ = (x[:, None] + offsets[None, :, 0]) % self.side
        ny_ = (y[:, None] + offsets[None, :, 1]) % self.side
        return ny_ * self.side + nx_


def torus_distance(geom: TorusGeometry, a: Coord, b: Coord) -> int:
    return geom.torus_distance(a, b)


def distance_histogram(geom: TorusGeometry) -> Dict[int, int]:
    return geom.distance_histogram()


def block_index(geom: TorusGeometry, c: Coord, block_side: int) -> Tuple[int, int]:
    return geom.block_index(c, block_side)


def adjacent_blocks(geom: TorusGeometry, block: Tuple[int, int], block_side: int) -> Set[Tuple[int, int]]:
    return geom.adjacent_blocks(block, block_side)


def canonical_seed_cluster(geom: TorusGeometry, anchor: Coord, k: int) -> List[Coord]:
    return geom.canonical_seed_cluster(anchor, k)
