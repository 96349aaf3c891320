import math

import numpy as np

from ..errors import ConfigurationError
from ..Geometry.torus import TorusGeometry, displacement_table


def normalization_constant(geom: TorusGeometry, gamma: float) -> float:
    """
    Exact normalization of the weak-tie law P(target = q) = lambda / d(p, q)^gamma.

    Args:
        geom (TorusGeometry): The torus the ties live on.
        gamma (float): Distance exponent, >= 0.
    Returns:
        float: lambda = 1 / sum_d count(d) * d^-gamma.
    """
    if gamma < 0:
        raise ConfigurationError(f"gamma must be >= 0, got {gamma}")
    counts = geom.histogram_counts()
    d = np.nonzero(counts)[0]
    total = math.fsum((counts[d] * np.power(d.astype(np.float64), -float(gamma))).tolist())
    return 1.0 / total


class DistanceSampler:
    """
    Draws weak-tie displacements with P(displacement of length d) = lambda * count(d) * d^-gamma.

    A draw is two uniforms: the first picks the distance through the cumulative table, the second picks
    one of the count(d) displacements of that length uniformly. A batch of size N consumes N distance
    uniforms first and then N displacement uniforms, both from rng.random.
    """

    def __init__(self, geom: TorusGeometry, gamma: float) -> None:
        self.geom = geom
        self.gamma = float(gamma)
        self.lam = normalization_constant(geom, gamma)
        self.dx, self.dy, self.dist, self.starts = displacement_table(geom.side)
        counts = geom.histogram_counts()
        self.distances = np.nonzero(counts)[0]
        self.counts = counts[self.distances]
        self.probabilities = self.lam * self.counts * np.power(self.distances.astype(np.float64), -self.gamma)
        self.cdf = np.cumsum(self.probabilities)
        self.cdf[-1] = 1.0

    def distance_probability(self, d: int) -> float:
        """Probability that a single tie has length exactly d."""
        hist = self.geom.distance_histogram()
        if d not in hist:
            return 0.0
        return self.lam * hist[d] * float(d) ** -self.gamma

    def target_probability(self, d: int) -> float:
        """Probability that a single tie lands on one particular node at distance d."""
        return self.lam * float(d) ** -self.gamma

    def tail_probability(self, threshold: int) -> float:
        """Probability that a single tie has length >= threshold."""
        mask = self.distances >= threshold
        return float(self.probabilities[mask].sum())

    def sample_distances(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        idx = np.minimum(np.searchsorted(self.cdf, u, side="right"), len(self.cdf) - 1)
        return self.distances[idx]

    def draw(self, rng: np.random.Generator, size: int):
        """
        Draw size displacements.

        Returns:
            tuple: (dx, dy, d) arrays; (dx, dy) are torus displacements in [0, L).
        """
        d = self.sample_distances(rng, size)
        v = rng.random(size)
        lo = self.starts[d]
        width = self.starts[d + 1] - lo
        pick = lo + np.minimum((v * width).astype(np.int64), width - 1)
        return self.dx[pick], self.dy[pick], d

    def draw_targets(self, rng: np.random.Generator, owners: np.ndarray):
        """Draw one target per owner; returns (targets, lengths)."""
        dx, dy, d = self.draw(rng, len(owners))
        L = self.geom.side
        oy, ox = np.divmod(np.asarray(owners, dtype=np.int64), L)
        targets = ((oy + dy) % L) * L + (ox + dx) % L
        return targets, d
