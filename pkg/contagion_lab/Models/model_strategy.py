import logging
from abc import ABC, abstractmethod

import numpy as np

from ..errors import ConfigurationError
from ..Geometry.torus import TorusGeometry, strong_radius
from ..Samplers.distance_sampler import DistanceSampler
from .small_world_graph import RNG_ALGORITHM, SmallWorldGraph, Variant

logger = logging.getLogger(__name__)


def validate_model_parameters(L: int, m: int, gamma: float) -> None:
    if m < 1:
        raise ConfigurationError(f"m must be >= 1, got {m}")
    if gamma < 0:
        raise ConfigurationError(f"gamma must be >= 0, got {gamma}")
    radius = strong_radius(m)
    if L < 2 * radius + 1:
        raise ConfigurationError(
            f"L={L} is too small for m={m}: the strong neighborhood of radius {radius} needs L >= {2 * radius + 1}")


class SmallWorldModel(ABC):
    """
    A way of drawing the m weak ties of every node.

    Draw order is part of the contract: one batch of n * m draws with nodes in row-major order and the
    m ties of a node consecutive, followed by whatever redraw batches the model needs. Each batch uses
    DistanceSampler.draw, so a batch of N consumes N distance uniforms and then N displacement uniforms.
    """

    variant: Variant

    @abstractmethod
    def draw_weak_ties(self, sampler: DistanceSampler, rng: np.random.Generator, m: int) -> np.ndarray:
        raise NotImplementedError("Subclasses must implement draw_weak_ties")

    def validate(self, L: int, m: int, gamma: float) -> None:
        validate_model_parameters(L, m, gamma)

    def generate(self, L: int, m: int, gamma: float, rng_seed: int) -> SmallWorldGraph:
        self.validate(L, m, gamma)
        geom = TorusGeometry(L)
        sampler = DistanceSampler(geom, gamma)
        rng = np.random.Generator(np.random.PCG64(rng_seed))
        logger.debug("Drawing %d weak ties per node on a %dx%d torus (variant %s, gamma=%s)",
                     m, L, L, self.variant.value, gamma)
        weak = self.draw_weak_ties(sampler, rng, m)
        return SmallWorldGraph(geom, m, gamma, self.variant, weak, rng_seed, RNG_ALGORITHM)

    @staticmethod
    def first_batch(sampler: DistanceSampler, rng: np.random.Generator, m: int) -> np.ndarray:
        n = sampler.geom.n
        owners = np.repeat(np.arange(n), m)
        targets, _ = sampler.draw_targets(rng, owners)
        return targets.reshape(n, m)
