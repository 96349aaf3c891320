from .independent import IndependentModel
from .model_strategy import SmallWorldModel
from .small_world_graph import SmallWorldGraph, Variant
from .without_replacement import WithoutReplacementModel

_MODELS = {Variant.W: WithoutReplacementModel, Variant.I: IndependentModel}


def model_for(variant) -> SmallWorldModel:
    return _MODELS[Variant.parse(variant)]()


def generate(L: int, m: int, gamma: float, variant, rng_seed: int) -> SmallWorldGraph:
    """Generate a K^W or K^I graph; identical arguments give bitwise identical graphs."""
    return model_for(variant).generate(L, m, gamma, rng_seed)
