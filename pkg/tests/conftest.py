import pytest

from contagion_lab.Dynamics.contagion_engine import run_contagion
from contagion_lab.evaluation import origin_cluster
from contagion_lab.Models.factory import generate


@pytest.fixture
def w_graph():
    return generate(16, 2, 2.8, "W", 7)


@pytest.fixture
def w_trace(w_graph):
    return run_contagion(w_graph, 2, origin_cluster(w_graph.geom, 2))


@pytest.fixture
def i_graph():
    return generate(12, 3, 2.5, "I", 11)
