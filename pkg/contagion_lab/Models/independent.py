import numpy as np

from ..Samplers.distance_sampler import DistanceSampler
from .model_strategy import SmallWorldModel
from .small_world_graph import Variant


class IndependentModel(SmallWorldModel):
    """K^I: the m ties of a node are independent draws, so a node may tie to the same target twice."""

    variant = Variant.I

    def draw_weak_ties(self, sampler: DistanceSampler, rng: np.random.Generator, m: int) -> np.ndarray:
        return self.first_batch(sampler, rng, m)
