import math

import numpy as np
import pytest

from contagion_lab.errors import ConfigurationError
from contagion_lab.Geometry.torus import TorusGeometry
from contagion_lab.Samplers.distance_sampler import DistanceSampler, normalization_constant


def test_uniform_normalization():
    assert normalization_constant(TorusGeometry(2), 0) == pytest.approx(1 / 3)
    assert normalization_constant(TorusGeometry(7), 0) == pytest.approx(1 / 48)


def test_normalization_matches_brute_force_sum():
    total = 0.0
    for dx in range(4):
        for dy in range(4):
            d = min(dx, 4 - dx) + min(dy, 4 - dy)
            if d:
                total += d ** -2.0
    assert normalization_constant(TorusGeometry(4), 2) == pytest.approx(1 / total, rel=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 1.0, 2.5, 3.5])
def test_probabilities_sum_to_one(gamma):
    sampler = DistanceSampler(TorusGeometry(16), gamma)
    assert math.fsum(sampler.probabilities.tolist()) == pytest.approx(1.0, abs=1e-12)
    assert sampler.tail_probability(1) == pytest.approx(1.0)
    assert sampler.distance_probability(1) == pytest.approx(4 * sampler.target_probability(1))


def test_negative_gamma_rejected():
    with pytest.raises(ConfigurationError):
        normalization_constant(TorusGeometry(4), -0.5)


def test_displacements_have_the_drawn_length():
    geom = TorusGeometry(10)
    sampler = DistanceSampler(geom, 2.0)
    dx, dy, d = sampler.draw(np.random.default_rng(3), 5000)
    circ = lambda v: np.minimum(v % 10, 10 - v % 10)
    np.testing.assert_array_equal(circ(dx) + circ(dy), d)
    assert d.min() >= 1


@pytest.mark.parametrize("gamma", [0.0, 2.5])
def test_distance_frequencies_within_five_sigma(gamma):
    geom = TorusGeometry(16)
    sampler = DistanceSampler(geom, gamma)
    N = 200_000
    d = sampler.sample_distances(np.random.default_rng(2024), N)
    observed = np.bincount(d, minlength=sampler.distances.max() + 1)[sampler.distances]
    expected = sampler.probabilities * N
    sigma = np.sqrt(expected * (1 - sampler.probabilities))
    keep = expected >= 50
    assert keep.any()
    assert np.all(np.abs(observed[keep] - expected[keep]) <= 5 * sigma[keep])


def test_draws_are_reproducible():
    sampler = DistanceSampler(TorusGeometry(8), 2.2)
    a = sampler.draw_targets(np.random.default_rng(9), np.arange(64))
    b = sampler.draw_targets(np.random.default_rng(9), np.arange(64))
    np.testing.assert_array_equal(a[0], b[0])
