import logging

import numpy as np

from ..errors import ConfigurationError
from ..Samplers.distance_sampler import DistanceSampler
from .model_strategy import SmallWorldModel
from .small_world_graph import Variant

logger = logging.getLogger(__name__)

MAX_REJECTION_ROUNDS = 32


class WithoutReplacementModel(SmallWorldModel):
    """
    K^W: the j-th tie of a node is the base law conditioned on missing the node's j - 1 earlier targets.

    After the first batch, slots are fixed in order j = 1 .. m - 1; every node whose slot j repeats one
    of its earlier targets redraws slot j (one batch over those nodes, row-major) until none repeat. Nodes
    still repeating after MAX_REJECTION_ROUNDS batches draw slot j straight from the conditional law, one
    uniform each in row-major order.
    """

    variant = Variant.W

    def validate(self, L: int, m: int, gamma: float) -> None:
        super().validate(L, m, gamma)
        if m > L * L - 1:
            raise ConfigurationError(f"m={m} distinct targets cannot be drawn among {L * L - 1} nodes")

    def draw_weak_ties(self, sampler: DistanceSampler, rng: np.random.Generator, m: int) -> np.ndarray:
        weak = self.first_batch(sampler, rng, m)
        rejections = 0
        for j in range(1, m):
            clash = np.flatnonzero((weak[:, :j] == weak[:, j:j + 1]).any(axis=1))
            rounds = 0
            while clash.size and rounds < MAX_REJECTION_ROUNDS:
                rejections += clash.size
                rounds += 1
                targets, _ = sampler.draw_targets(rng, clash)
                weak[clash, j] = targets
                clash = clash[(weak[clash, :j] == weak[clash, j:j + 1]).any(axis=1)]
            if clash.size:
                logger.debug("Drawing slot %d of %d nodes from the conditional law", j, clash.size)
                weak[clash, j] = conditional_targets(sampler, rng, clash, weak[clash, :j])
        logger.debug("Redrew %d repeated weak ties", rejections)
        return weak


def conditional_targets(sampler: DistanceSampler, rng: np.random.Generator, owners: np.ndarray,
                        used: np.ndarray) -> np.ndarray:
    """
    One target per owner from lambda / d^gamma restricted to targets the owner has not used yet.

    Weights are renormalized in log space over the allowed targets, so the draw stays defined when the
    unrestricted law has underflowed to zero beyond the nearest ring.
    """
    geom = sampler.geom
    everyone = np.arange(geom.n)
    u = rng.random(len(owners))
    out = np.empty(len(owners), dtype=np.int64)
    for i, owner in enumerate(owners.tolist()):
        d = geom.node_distances(owner, everyone).astype(np.float64)
        allowed = d > 0
        allowed[used[i]] = False
        logw = np.where(allowed, -sampler.gamma * np.log(np.maximum(d, 1.0)), -np.inf)
        w = np.exp(logw - logw[allowed].max())
        cdf = np.cumsum(w)
        pick = int(np.searchsorted(cdf, u[i] * cdf[-1], side="right"))
        out[i] = min(pick, geom.n - 1)
        if not allowed[out[i]]:
            # rounding pushed u * total past the last allowed entry
            out[i] = np.flatnonzero(allowed)[-1]
    return out
