from .distance_sampler import DistanceSampler, normalization_constant
