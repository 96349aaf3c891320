import logging
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

from joblib import Parallel, delayed

from ..Dynamics.contagion_engine import detect_new_seed_cluster, run_contagion
from ..errors import ConfigurationError, PreconditionError
from ..Geometry.torus import Coord, Square, TorusGeometry, strong_radius
from ..Models.factory import generate
from ..utilities import derive_seed, floor_power, proportion_stderr, wilson_interval

logger = logging.getLogger(__name__)


def grid_reach(m: int, k: int) -> int:
    """Farthest a k-round infection can travel over strong ties alone."""
    return k * strong_radius(m)


def subsquare_side(L: int, delta: float, k: int, m: int) -> int:
    """
    Side of the n^(1 - delta)-node subsquares, i.e. floor(L^(1 - delta)), capped so that the diagonal pair
    A at the origin and B at (L // 2, L // 2) sits more than grid_reach(m, k) apart.
    """
    if not 0 < delta < 1:
        raise ConfigurationError(f"delta must lie in (0, 1), got {delta}")
    side = min(floor_power(L, 1.0 - delta), L // 2 - grid_reach(m, k) // 2)
    if side < k:
        raise PreconditionError(f"Subsquares of side {side} on a torus of side {L} cannot hold a {k}-seed cluster "
                                f"more than {grid_reach(m, k)} away from each other")
    return side


def diagonal_placement(L: int, side: int) -> Tuple[Square, Square]:
    return Square(Coord(0, 0), side), Square(Coord(L // 2, L // 2), side)


@dataclass
class SpreadingEstimate:
    successes: int
    trials: int
    success_rate: float
    ci95: Tuple[float, float]
    stderr: float
    subsquare_side: int
    a_origin: Tuple[int, int]
    b_origin: Tuple[int, int]

    def to_dict(self) -> dict:
        return asdict(self)


def single_trial(L: int, m: int, gamma: float, variant, k: int, A: Square, B: Square, rng_seed: int) -> bool:
    """One fresh graph: seed all of A, run k rounds, look for a k-seed cluster inside B."""
    graph = generate(L, m, gamma, variant, rng_seed)
    trace = run_contagion(graph, k, A.node_ids(graph.geom), max_rounds=k)
    return detect_new_seed_cluster(trace, B, k, deadline_round=k) is not None


def recursive_spreading_trial(L: int, m: int, gamma: float, variant, k: int, delta: float, trials: int,
                              rng_seed: int, n_jobs: int = 1,
                              placement: Optional[Tuple[Coord, Coord]] = None) -> SpreadingEstimate:
    """
    Monte Carlo estimate of the probability that a fully infected subsquare A spawns a new k-seed cluster
    in a subsquare B more than k strong radii away within k rounds, with S the whole torus.

    Args:
        L, m, gamma, variant: Graph parameters; every trial draws a fresh graph.
        k (int): Contagion threshold.
        delta (float): Subsquares hold n^(1 - delta) nodes.
        trials (int): Number of independent trials.
        rng_seed (int): Base seed; trial i uses derive_seed(rng_seed, i).
        n_jobs (int): joblib parallelism.
        placement (tuple): Optional (A origin, B origin) overriding the diagonal placement.
    Returns:
        SpreadingEstimate: success rate with its Wilson 95% interval.
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}")
    side = subsquare_side(L, delta, k, m)
    if placement is None:
        A, B = diagonal_placement(L, side)
    else:
        A, B = Square(Coord(*placement[0]), side), Square(Coord(*placement[1]), side)
        reach = grid_reach(m, k)
        if A.gap(B, TorusGeometry(L)) <= reach:
            raise PreconditionError(f"Subsquares at {tuple(A.origin)} and {tuple(B.origin)} lie within "
                                    f"{reach} of each other")

    logger.info("Running %d recursive-spreading trials (L=%d, gamma=%s, k=%d, side=%d)", trials, L, gamma, k, side)
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(single_trial)(L, m, gamma, variant, k, A, B, derive_seed(rng_seed, i)) for i in range(trials)
    )
    successes = int(sum(outcomes))
    return SpreadingEstimate(
        successes=successes,
        trials=trials,
        success_rate=successes / trials,
        ci95=wilson_interval(successes, trials, 0.95),
        stderr=proportion_stderr(successes, trials),
        subsquare_side=side,
        a_origin=tuple(A.origin),
        b_origin=tuple(B.origin),
    )
