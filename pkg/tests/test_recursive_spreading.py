import pytest

from contagion_lab.Diagnostics.recursive_spreading import (diagonal_placement, grid_reach, recursive_spreading_trial,
                                                           single_trial, subsquare_side)
from contagion_lab.errors import ConfigurationError, PreconditionError
from contagion_lab.Geometry.torus import Coord, Square, TorusGeometry
from contagion_lab.utilities import derive_seed


@pytest.mark.parametrize("L, delta, k, m, side", [(64, 0.2, 2, 2, 27), (64, 0.05, 2, 2, 30), (16, 0.2, 2, 2, 6),
                                                  (16, 0.05, 2, 5, 5)])
def test_subsquare_side(L, delta, k, m, side):
    assert subsquare_side(L, delta, k, m) == side


def test_subsquare_too_small_for_cluster():
    with pytest.raises(PreconditionError):
        subsquare_side(8, 0.9, 3, 2)
    with pytest.raises(PreconditionError):
        subsquare_side(8, 0.05, 2, 5)
    with pytest.raises(ConfigurationError):
        subsquare_side(8, 1.0, 2, 2)


@pytest.mark.parametrize("L, delta, k, m", [(16, 0.2, 2, 2), (16, 0.05, 2, 5), (17, 0.05, 2, 2), (64, 0.05, 3, 2),
                                            (33, 0.1, 2, 10)])
def test_diagonal_subsquares_out_of_strong_reach(L, delta, k, m):
    geom = TorusGeometry(L)
    A, B = diagonal_placement(L, subsquare_side(L, delta, k, m))
    assert A.gap(B, geom) > grid_reach(m, k)
    assert B.gap(A, geom) == A.gap(B, geom)


def test_diagonal_placement():
    A, B = diagonal_placement(20, 10)
    assert A == Square(Coord(0, 0), 10)
    assert B == Square(Coord(10, 10), 10)


def test_square_gap():
    geom = TorusGeometry(10)
    A = Square(Coord(0, 0), 3)
    assert A.gap(Square(Coord(5, 0), 3), geom) == 3
    assert A.gap(Square(Coord(5, 5), 3), geom) == 6
    assert A.gap(Square(Coord(8, 8), 2), geom) == 2
    assert A.gap(Square(Coord(2, 2), 3), geom) == 0
    assert A.gap(Square(Coord(9, 4), 2), geom) == 2


@pytest.mark.parametrize("placement", [((0, 0), (4, 4)), ((0, 0), (0, 8)), ((0, 0), (0, 9))])
def test_close_placement_rejected(placement):
    with pytest.raises(PreconditionError):
        recursive_spreading_trial(16, 2, 2.3, "W", 2, 0.2, 2, 0, placement=placement)


def test_local_ties_never_reach_far_subsquare():
    estimate = recursive_spreading_trial(16, 5, 1000.0, "I", 2, 0.05, 10, 3)
    assert estimate.subsquare_side == 5
    assert estimate.successes == 0
    assert estimate.success_rate == 0.0


def test_trial_estimate_is_reproducible():
    a = recursive_spreading_trial(16, 2, 2.3, "W", 2, 0.2, 6, 99)
    b = recursive_spreading_trial(16, 2, 2.3, "W", 2, 0.2, 6, 99)
    assert a == b
    assert a.trials == 6 and a.subsquare_side == 6
    assert a.success_rate == a.successes / 6
    low, high = a.ci95
    assert low - 1e-12 <= a.success_rate <= high + 1e-12
    assert a.to_dict()["b_origin"] == (8, 8)


def test_trial_outcomes_follow_derived_seeds():
    A, B = diagonal_placement(16, 6)
    outcomes = [single_trial(16, 2, 2.3, "I", 2, A, B, derive_seed(5, i)) for i in range(4)]
    estimate = recursive_spreading_trial(16, 2, 2.3, "I", 2, 0.2, 4, 5, n_jobs=2)
    assert estimate.successes == sum(outcomes)


def test_custom_placement():
    estimate = recursive_spreading_trial(32, 2, 2.3, "W", 2, 0.3, 2, 1, placement=((0, 0), (0, 16)))
    assert estimate.subsquare_side == 11
    assert estimate.b_origin == (0, 16)


def test_zero_trials_rejected():
    with pytest.raises(ConfigurationError):
        recursive_spreading_trial(16, 2, 2.3, "W", 2, 0.2, 0, 1)
