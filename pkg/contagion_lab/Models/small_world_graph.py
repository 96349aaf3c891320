import logging
import struct
from enum import Enum
from functools import cached_property

import networkx as nx
import numpy as np

from ..errors import GraphFormatError, LengthMismatchError, TargetRangeError
from ..Geometry.torus import TorusGeometry, strong_offsets, strong_radius
from ..utilities import ensure_parent_dir

logger = logging.getLogger(__name__)

FORMAT_MAGIC = b"KSWG"
FORMAT_VERSION = 1
RNG_ALGORITHM = "PCG64"
# magic, version, L, m, gamma, variant, rng seed, rng algorithm id
HEADER = struct.Struct("<4sHIIdcQ16s")

STRONG = 0
WEAK = 1


class Variant(str, Enum):
    W = "W"  # weak ties drawn without replacement, no multi-edges
    I = "I"  # weak ties drawn independently, multi-edges allowed

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise GraphFormatError(f"Unknown variant {value!r}, expected 'W' or 'I'") from None


class SmallWorldGraph:
    """
    A generated Kleinberg graph on the L x L torus.

    Strong ties are never stored: u and v are strong-tied iff their torus distance is at most ceil(sqrt(m)).
    Weak ties are an (n, m) array, row u holding the targets of u's m outgoing ties in draw order.
    Influence flows from a tie's target back to its owner.
    """

    def __init__(self, geom: TorusGeometry, m: int, gamma: float, variant, weak: np.ndarray,
                 rng_seed: int, rng_algorithm: str = RNG_ALGORITHM) -> None:
        self.geom = geom
        self.m = int(m)
        self.gamma = float(gamma)
        self.variant = Variant.parse(variant)
        self.weak = np.ascontiguousarray(weak, dtype=np.int64)
        self.weak.setflags(write=False)
        self.rng_seed = int(rng_seed)
        self.rng_algorithm = rng_algorithm
        self.radius = strong_radius(self.m)

    @property
    def n(self) -> int:
        return self.geom.n

    @property
    def side(self) -> int:
        return self.geom.side

    def __eq__(self, other) -> bool:
        if not isinstance(other, SmallWorldGraph):
            return NotImplemented
        return (self.geom == other.geom and self.m == other.m and self.gamma == other.gamma
                and self.variant == other.variant and self.rng_seed == other.rng_seed
                and self.rng_algorithm == other.rng_algorithm and np.array_equal(self.weak, other.weak))

    def __repr__(self) -> str:
        return (f"SmallWorldGraph(L={self.side}, m={self.m}, gamma={self.gamma}, "
                f"variant={self.variant.value}, rng_seed={self.rng_seed})")

    # ------------------------------------------------------------------ ties

    def strong_neighbors(self, u: int) -> np.ndarray:
        return self.geom.neighbor_ids(np.array([u]), strong_offsets(self.radius))[0]

    @cached_property
    def weak_lengths(self) -> np.ndarray:
        owners = np.repeat(np.arange(self.n), self.m).reshape(self.n, self.m)
        lengths = self.geom.node_distances(owners, self.weak)
        lengths.setflags(write=False)
        return lengths

    def long_ties(self, threshold: int):
        """
        Weak ties of length >= threshold.

        Returns:
            tuple: (owners, targets, lengths, tie_ids) arrays; tie_id = owner * m + slot.
        """
        tie_ids = np.flatnonzero(self.weak_lengths.ravel() >= threshold)
        owners = tie_ids // self.m
        return owners, self.weak.ravel()[tie_ids], self.weak_lengths.ravel()[tie_ids], tie_ids

    def influence_entries(self, u: int):
        """
        Influence sources of u with the kind of tie each one arrives through.

        In K^I every edge is its own entry, so a target hit by several of u's weak ties, or a strong
        neighbor that is also a weak target, appears once per edge. K^W graphs are simple: a node counts
        once, and a weak target that is also a strong neighbor is reported as a strong entry.

        Returns:
            tuple: (sources, kinds) arrays, kinds holding STRONG or WEAK.
        """
        strong = self.strong_neighbors(u)
        weak = self.weak[u]
        if self.variant is Variant.W:
            weak = weak[~np.isin(weak, strong)]
        sources = np.concatenate([strong, weak])
        kinds = np.concatenate([np.full(len(strong), STRONG, dtype=np.int8), np.full(len(weak), WEAK, dtype=np.int8)])
        return sources, kinds

    def influence_sources(self, u: int) -> np.ndarray:
        """Multiset (sorted array with repeats) of nodes whose infection counts toward u's threshold."""
        return np.sort(self.influence_entries(u)[0])

    @cached_property
    def reverse_index(self):
        """
        CSR map from a source node to the nodes it influences, one entry per counted edge.

        Returns:
            tuple: (indptr, dependents) so that dependents[indptr[s]:indptr[s + 1]] lists every v having s
            among its influence sources, with multiplicity.
        """
        n = self.n
        nodes = np.arange(n)
        strong = self.geom.neighbor_ids(nodes, strong_offsets(self.radius))
        # strong ties are symmetric: the neighbors of s are exactly the nodes s influences through them
        src_strong = np.repeat(nodes, strong.shape[1])
        dst_strong = strong.ravel()
        owners = np.repeat(nodes, self.m)
        targets = self.weak.ravel()
        if self.variant is Variant.W:
            keep = self.weak_lengths.ravel() > self.radius
            owners, targets = owners[keep], targets[keep]
        src = np.concatenate([src_strong, targets])
        dst = np.concatenate([dst_strong, owners])
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        dependents = dst[order]
        indptr.setflags(write=False)
        dependents.setflags(write=False)
        return indptr, dependents

    @cached_property
    def weak_owners_index(self):
        """CSR map from a node to the owners of weak ties that target it (with multiplicity)."""
        owners = np.repeat(np.arange(self.n), self.m)
        targets = self.weak.ravel()
        order = np.argsort(targets, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(targets, minlength=self.n), out=indptr[1:])
        return indptr, owners[order]

    def undirected_neighbors(self, u: int) -> np.ndarray:
        """Distinct neighbors of u in the undirected union of strong and weak ties."""
        indptr, owners = self.weak_owners_index
        return np.unique(np.concatenate([self.strong_neighbors(u), self.weak[u], owners[indptr[u]:indptr[u + 1]]]))

    def to_networkx(self) -> nx.Graph:
        """Undirected simple view of strong and weak ties together."""
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        nodes = np.arange(self.n)
        strong = self.geom.neighbor_ids(nodes, strong_offsets(self.radius))
        g.add_edges_from(zip(np.repeat(nodes, strong.shape[1]).tolist(), strong.ravel().tolist()))
        g.add_edges_from(zip(np.repeat(nodes, self.m).tolist(), self.weak.ravel().tolist()))
        return g

    # ------------------------------------------------------------- file I/O

    def serialize(self) -> bytes:
        header = HEADER.pack(FORMAT_MAGIC, FORMAT_VERSION, self.side, self.m, self.gamma,
                             self.variant.value.encode("ascii"), self.rng_seed,
                             self.rng_algorithm.encode("ascii").ljust(16, b"\0"))
        return header + self.weak.astype("<u4").tobytes()

    @classmethod
    def deserialize(cls, data: bytes) -> "SmallWorldGraph":
        if len(data) < HEADER.size:
            raise GraphFormatError(f"Graph header needs {HEADER.size} bytes, got {len(data)}")
        magic, version, L, m, gamma, variant, seed, algorithm = HEADER.unpack_from(data)
        if magic != FORMAT_MAGIC:
            raise GraphFormatError(f"Bad magic {magic!r}, expected {FORMAT_MAGIC!r}")
        if version != FORMAT_VERSION:
            raise GraphFormatError(f"Unsupported format version {version}")
        if variant not in (b"W", b"I"):
            raise GraphFormatError(f"Variant byte must be W or I, got {variant!r}")
        if L < 2 or m < 1:
            raise GraphFormatError(f"Invalid header values L={L}, m={m}")
        geom = TorusGeometry(L)
        expected = geom.n * m * 4
        payload = data[HEADER.size:]
        if len(payload) != expected:
            raise LengthMismatchError(f"Expected {expected} bytes of weak ties, got {len(payload)}")
        weak = np.frombuffer(payload, dtype="<u4").astype(np.int64).reshape(geom.n, m)
        if weak.size and weak.max() >= geom.n:
            raise TargetRangeError(f"Target id {int(weak.max())} out of range for n={geom.n}")
        if np.any(weak == np.arange(geom.n)[:, None]):
            raise TargetRangeError("A weak tie targets its own owner")
        if variant == b"W" and m > 1:
            ordered = np.sort(weak, axis=1)
            if np.any(ordered[:, 1:] == ordered[:, :-1]):
                raise GraphFormatError("Variant W graph holds a repeated weak tie")
        return cls(geom, m, gamma, variant.decode("ascii"), weak, seed,
                   algorithm.rstrip(b"\0").decode("ascii"))

    def save(self, path: str) -> None:
        logger.info("Saving graph to %s", path)
        ensure_parent_dir(path)
        with open(path, "wb") as f:
            f.write(self.serialize())

    @classmethod
    def load(cls, path: str) -> "SmallWorldGraph":
        logger.info("Loading graph from %s", path)
        with open(path, "rb") as f:
            return cls.deserialize(f.read())

    def export_edge_list(self, path: str) -> None:
        """One "u v" line per weak tie, owner first, in row-major draw order."""
        ensure_parent_dir(path)
        owners = np.repeat(np.arange(self.n), self.m)
        np.savetxt(path, np.stack([owners, self.weak.ravel()], axis=1), fmt="%d")


def serialize(graph: SmallWorldGraph) -> bytes:
    return graph.serialize()


def deserialize(data: bytes) -> SmallWorldGraph:
    return SmallWorldGraph.deserialize(data)


def influence_sources(graph: SmallWorldGraph, u: int) -> np.ndarray:
    return graph.influence_sources(u)


def weak_tie_lengths(graph: SmallWorldGraph) -> np.ndarray:
    return graph.weak_lengths


def long_ties(graph: SmallWorldGraph, threshold: int):
    return graph.long_ties(threshold)
