from .factory import generate, model_for
from .small_world_graph import (STRONG, WEAK, SmallWorldGraph, Variant, deserialize, influence_sources, long_ties,
                               serialize, weak_tie_lengths)
