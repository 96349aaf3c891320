import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contagion_lab.Dynamics.contagion_engine import (NEVER, ContagionTrace, cluster_shapes,
                                                     detect_new_seed_cluster, fixed_polyominoes,
                                                     rounds_lower_envelope, rounds_to_full, run_contagion)
from contagion_lab.errors import ConfigurationError
from contagion_lab.evaluation import origin_cluster
from contagion_lab.Geometry.torus import Coord, Square, TorusGeometry
from contagion_lab.Models.factory import generate
from tests.oracles import brute_force_cluster_round, influence_eccentricity, naive_influence_sources, naive_rescan


def check_trace_invariants(graph, trace):
    rounds = trace.infected_round
    assert trace.infected_count == len(trace.seeds) + sum(trace.frontier_sizes)
    assert trace.cumulative_infected()[-1] == trace.infected_count
    for v in np.flatnonzero(rounds > 0).tolist():
        r = rounds[naive_influence_sources(graph, v)]
        t = rounds[v]
        assert np.count_nonzero((r >= 0) & (r <= t - 1)) >= trace.k
        assert np.count_nonzero((r >= 0) & (r <= t - 2)) < trace.k


def test_all_seeded_finishes_at_round_zero():
    graph = generate(6, 2, 2.0, "W", 0)
    trace = run_contagion(graph, 3, np.arange(graph.n))
    assert trace.covered and trace.rounds_elapsed == 0
    assert rounds_to_full(trace) == 0
    assert trace.frontier_sizes == []


def test_fixed_instance_matches_rescan():
    graph = generate(12, 2, 2.3, "W", 123)
    seeds = origin_cluster(graph.geom, 2)
    trace = run_contagion(graph, 2, seeds)
    np.testing.assert_array_equal(trace.infected_round, naive_rescan(graph, 2, seeds, 48))
    check_trace_invariants(graph, trace)


@given(st.integers(6, 12), st.sampled_from([2, 3, 4]), st.sampled_from([1, 2, 3]), st.sampled_from(["W", "I"]),
       st.sampled_from([0.0, 1.0, 2.0, 2.5, 3.5]), st.integers(0, 2 ** 32))
@settings(max_examples=40, deadline=None)
def test_engine_matches_rescan(L, m, k, variant, gamma, seed):
    graph = generate(L, m, gamma, variant, seed)
    seeds = origin_cluster(graph.geom, k)
    trace = run_contagion(graph, k, seeds)
    np.testing.assert_array_equal(trace.infected_round, naive_rescan(graph, k, seeds, 4 * L))
    check_trace_invariants(graph, trace)


@given(st.integers(5, 10), st.sampled_from(["W", "I"]), st.integers(0, 2 ** 32))
@settings(max_examples=20, deadline=None)
def test_single_seed_rounds_equal_eccentricity(L, variant, seed):
    graph = generate(L, 2, 2.5, variant, seed)
    start = seed % graph.n
    trace = run_contagion(graph, 1, [start])
    assert trace.covered
    assert rounds_to_full(trace) == influence_eccentricity(graph, start)


def test_more_seeds_never_delay_anyone(w_graph):
    small = run_contagion(w_graph, 2, origin_cluster(w_graph.geom, 2)).infected_round
    big = run_contagion(w_graph, 2, origin_cluster(w_graph.geom, 2) + [w_graph.geom.node_id(Coord(8, 8))]).infected_round
    reached = small >= 0
    assert np.all(big[reached] >= 0)
    assert np.all(big[reached] <= small[reached])


def test_higher_threshold_never_speeds_anyone_up():
    graph = generate(12, 4, 2.2, "I", 8)
    seeds = origin_cluster(graph.geom, 3)
    low = run_contagion(graph, 2, seeds).infected_round
    high = run_contagion(graph, 3, seeds).infected_round
    reached = high >= 0
    assert np.all(low[reached] >= 0)
    assert np.all(high[reached] >= low[reached])


def test_round_cap_and_stall():
    graph = generate(10, 2, 2.0, "W", 1)
    capped = run_contagion(graph, 2, origin_cluster(graph.geom, 2), max_rounds=0)
    assert capped.rounds_elapsed == 0 and not capped.covered
    assert rounds_to_full(capped) is None

    # a single seed cannot give anyone two infected sources
    stalled = run_contagion(graph, 2, [0])
    assert not stalled.covered and stalled.infected_count == 1
    assert stalled.rounds_elapsed == 0


def test_default_cap_is_four_times_side(w_trace):
    assert w_trace.max_rounds == 64


@pytest.mark.parametrize("kwargs", [dict(k=0, seeds=[0]), dict(k=2, seeds=[]), dict(k=2, seeds=[256]),
                                    dict(k=2, seeds=[0, 1], max_rounds=-1)])
def test_bad_run_arguments(w_graph, kwargs):
    with pytest.raises(ConfigurationError):
        run_contagion(w_graph, **kwargs)


def test_trace_exports(tmp_path, w_graph):
    trace = run_contagion(w_graph, 2, origin_cluster(w_graph.geom, 2), max_rounds=2)
    frame = trace.to_frame()
    assert list(frame.columns) == ["node_x", "node_y", "infected_round"]
    assert frame["infected_round"].isna().sum() == w_graph.n - trace.infected_count
    trace.save_csv(str(tmp_path / "trace.csv"))
    back = pd.read_csv(tmp_path / "trace.csv")
    assert len(back) == w_graph.n
    trace.save_summary(str(tmp_path / "summary.json"))
    assert trace.summary()["rounds"] == 2
    assert rounds_lower_envelope(trace) == trace.cumulative_infected()


def test_polyomino_counts():
    assert [len(fixed_polyominoes(s)) for s in (1, 2, 3, 4)] == [1, 2, 6, 19]
    assert len(cluster_shapes(6)) == 2


def manual_trace(L, rounds_by_coord):
    geom = TorusGeometry(L)
    rounds = np.full(geom.n, NEVER, dtype=np.int64)
    for c, r in rounds_by_coord.items():
        rounds[geom.node_id(c)] = r
    seeds = np.flatnonzero(rounds == 0)
    return ContagionTrace(geom=geom, k=2, seeds=seeds, infected_round=rounds)


def test_cluster_round_is_the_later_of_the_pair():
    trace = manual_trace(6, {Coord(0, 0): 3, Coord(1, 0): 5, Coord(4, 4): 1})
    region = Square(Coord(0, 0), 3)
    cluster, round_ = detect_new_seed_cluster(trace, region, 2, deadline_round=6)
    assert round_ == 5
    assert set(cluster) == {Coord(0, 0), Coord(1, 0)}
    assert detect_new_seed_cluster(trace, region, 2, deadline_round=4) is None


def test_seeded_region_found_at_round_zero():
    trace = manual_trace(6, {c: 0 for c in Square(Coord(2, 2), 3).coords(TorusGeometry(6))})
    cluster, round_ = detect_new_seed_cluster(trace, Square(Coord(2, 2), 3), 3, deadline_round=0)
    assert round_ == 0 and len(cluster) == 3


def test_diagonal_neighbors_are_not_a_cluster():
    trace = manual_trace(6, {Coord(0, 0): 1, Coord(1, 1): 1})
    assert detect_new_seed_cluster(trace, Square(Coord(0, 0), 3), 2, deadline_round=10) is None


@pytest.mark.parametrize("k, seed", [(2, 0), (2, 1), (3, 2), (3, 3), (4, 4)])
def test_cluster_detection_matches_subset_scan(k, seed):
    graph = generate(10, 4, 2.0, "I", seed)
    trace = run_contagion(graph, k, origin_cluster(graph.geom, k), max_rounds=4)
    region = Square(Coord(3, 3), 4)
    found = detect_new_seed_cluster(trace, region, k, deadline_round=100)
    expected = brute_force_cluster_round(trace, region, k)
    assert (found[1] if found else None) == expected


def test_region_must_fit(w_trace):
    with pytest.raises(ConfigurationError):
        detect_new_seed_cluster(w_trace, Square(Coord(0, 0), 17), 2, 5)
