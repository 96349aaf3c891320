import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, List, Optional, Set

import networkx as nx
import numpy as np
import pandas as pd

from ..errors import ConfigurationError, PreconditionError, TraceCorruptionError
from ..Models.small_world_graph import STRONG, WEAK, SmallWorldGraph, Variant
from ..utilities import ceil_power, ensure_parent_dir
from .contagion_engine import ContagionTrace

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.1


def long_tie_threshold(n: int, epsilon: float) -> int:
    """ceil(n^(1/2 - epsilon)), snapping to the exact integer when the power is one."""
    if not 0 < epsilon < 0.5:
        raise ConfigurationError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    return ceil_power(n, 0.5 - float(epsilon))


def count_long_ties(graph: SmallWorldGraph, nodes: Iterable[int], threshold: int) -> int:
    """Weak ties of length >= threshold with an endpoint in nodes, each tie counted once."""
    nodes = np.fromiter(nodes, dtype=np.int64)
    if nodes.size == 0:
        return 0
    owners, targets, _, _ = graph.long_ties(threshold)
    return int(np.count_nonzero(np.isin(owners, nodes) | np.isin(targets, nodes)))


@dataclass
class InfectionDag:
    """
    Route-of-infection DAG: every infected non-seed node points at the k sources that infected it.

    Edges are stored as aligned arrays sorted by node; out_indptr[v]:out_indptr[v + 1] slices v's edges.
    """

    graph: SmallWorldGraph
    trace: ContagionTrace
    k: int
    epsilon: float
    threshold: int
    node: np.ndarray
    infector: np.ndarray
    kind: np.ndarray
    length: np.ndarray
    is_long: np.ndarray
    out_indptr: np.ndarray
    certified: bool = True

    @property
    def edge_count(self) -> int:
        return int(self.node.size)

    def infectors_of(self, v: int) -> np.ndarray:
        return self.infector[self.out_indptr[v]:self.out_indptr[v + 1]]

    @cached_property
    def short_graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(np.flatnonzero(self.trace.infected_round >= 0).tolist())
        short = ~self.is_long
        g.add_edges_from(zip(self.node[short].tolist(), self.infector[short].tolist()))
        return g

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(np.flatnonzero(self.trace.infected_round >= 0).tolist())
        for v, u, kind, length, is_long in zip(self.node.tolist(), self.infector.tolist(), self.kind.tolist(),
                                              self.length.tolist(), self.is_long.tolist()):
            g.add_edge(v, u, kind="strong" if kind == STRONG else "weak", length=length,
                       tie_class="long" if is_long else "short")
        return g

    def topological_key(self, v: int):
        return int(self.trace.infected_round[v]), int(v)

    def short_closure(self, S: Iterable[int]) -> Set[int]:
        return short_closure(self, S)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "node": self.node,
            "infector": self.infector,
            "tie_kind": np.where(self.kind == STRONG, "strong", "weak"),
            "length": self.length,
            "tie_class": np.where(self.is_long, "long", "short"),
        })

    def save_csv(self, path: str) -> None:
        ensure_parent_dir(path)
        self.to_frame().to_csv(path, index=False)


def build_dag(graph: SmallWorldGraph, trace: ContagionTrace, k: int, epsilon: float = DEFAULT_EPSILON) -> InfectionDag:
    """
    Build D(G, A) from a finished trace.

    For each infected non-seed node the k infectors are its influence entries infected strictly earlier,
    taken by ascending (round, node id, strong before weak). A K^I multi-edge fills one slot per edge.

    Raises:
        TraceCorruptionError: if the trace could not have come from this graph with threshold k.
    """
    if trace.geom != graph.geom:
        raise TraceCorruptionError(f"Trace torus {trace.geom} does not match graph torus {graph.geom}")
    if trace.k != k:
        raise TraceCorruptionError(f"Trace was run with k={trace.k}, DAG requested with k={k}")
    threshold = long_tie_threshold(graph.n, epsilon)
    rounds = trace.infected_round
    if np.any(rounds[trace.seeds] != 0):
        raise TraceCorruptionError("Seeds must be infected at round 0")

    nodes = np.flatnonzero(rounds > 0)
    node_col, infector_col, kind_col = [], [], []
    for v in nodes.tolist():
        sources, kinds = graph.influence_entries(v)
        r = rounds[sources]
        t = rounds[v]
        eligible = (r >= 0) & (r < t)
        if np.count_nonzero(eligible) < k:
            raise TraceCorruptionError(f"Node {v} infected at round {t} with fewer than {k} earlier-infected sources")
        if t >= 2 and np.count_nonzero((r >= 0) & (r <= t - 2)) >= k:
            raise TraceCorruptionError(f"Node {v} reached threshold before round {t - 1} but was infected at round {t}")
        sources, kinds, r = sources[eligible], kinds[eligible], r[eligible]
        chosen = np.lexsort((kinds, sources, r))[:k]
        node_col.append(np.full(k, v, dtype=np.int64))
        infector_col.append(sources[chosen])
        kind_col.append(kinds[chosen])

    if node_col:
        node = np.concatenate(node_col)
        infector = np.concatenate(infector_col)
        kind = np.concatenate(kind_col)
    else:
        node = np.zeros(0, dtype=np.int64)
        infector = np.zeros(0, dtype=np.int64)
        kind = np.zeros(0, dtype=np.int8)
    length = graph.geom.node_distances(node, infector) if node.size else np.zeros(0, dtype=np.int64)
    is_long = (kind == WEAK) & (length >= threshold)
    out_indptr = np.zeros(graph.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(node, minlength=graph.n), out=out_indptr[1:])

    dag = InfectionDag(graph=graph, trace=trace, k=k, epsilon=epsilon, threshold=threshold, node=node,
                       infector=infector, kind=kind, length=length, is_long=is_long, out_indptr=out_indptr,
                       certified=graph.variant is Variant.W)
    logger.debug("Built infection DAG with %d edges (%d long)", dag.edge_count, int(is_long.sum()))
    return dag


def validate_dag(dag: InfectionDag) -> List[str]:
    """Structural invariants of D(G, A); returns the list of broken ones (empty when sound)."""
    problems = []
    rounds = dag.trace.infected_round
    if not nx.is_directed_acyclic_graph(dag.to_networkx()):
        problems.append("cycle")
    if np.any(rounds[dag.infector] >= rounds[dag.node]) or np.any(rounds[dag.infector] < 0):
        problems.append("edge not pointing to an earlier infection")
    out_degree = np.diff(dag.out_indptr)
    non_seed = rounds > 0
    if np.any(out_degree[non_seed] != dag.k):
        problems.append("non-seed node without exactly k infectors")
    if np.any(out_degree[~non_seed] != 0):
        problems.append("seed or uninfected node with infectors")
    for v in np.flatnonzero(non_seed).tolist():
        available, counts = np.unique(dag.graph.influence_sources(v), return_counts=True)
        used, used_counts = np.unique(dag.infectors_of(v), return_counts=True)
        pos = np.searchsorted(available, used)
        if np.any(pos >= available.size) or np.any(available[np.minimum(pos, available.size - 1)] != used) \
                or np.any(counts[np.minimum(pos, available.size - 1)] < used_counts):
            problems.append(f"node {v} uses an infector that is not one of its influence sources")
            break
    return problems


def short_closure(dag: InfectionDag, S: Iterable[int]) -> Set[int]:
    """A(S): nodes reachable from S along short DAG edges, in edge direction; includes S."""
    S = {int(s) for s in S}
    closure = set(S)
    g = dag.short_graph
    for s in S:
        if s in g:
            closure |= nx.descendants(g, s)
    return closure


def long_tie_count(graph: SmallWorldGraph, dag: InfectionDag, S: Iterable[int]) -> int:
    """L(S): long weak ties incident to A(S), each tie counted once."""
    return count_long_ties(graph, short_closure(dag, S), dag.threshold)


@dataclass
class PathCheck:
    passed: bool
    counterexample: Optional[List[int]] = None


def check_path_time_consistency(dag: InfectionDag, trace: ContagionTrace) -> PathCheck:
    """
    Every directed DAG path from v to u spans at least its length in rounds.

    Longest-path DP: reach[v] = max(round(v), 1 + reach[u] over edges v -> u) taken in ascending round
    order; the property holds iff reach[v] == round(v) for every node.
    """
    rounds = trace.infected_round
    bad = np.flatnonzero(rounds[dag.infector] >= rounds[dag.node])
    if bad.size:
        e = int(bad[0])
        return PathCheck(False, [int(dag.node[e]), int(dag.infector[e])])

    infected = np.flatnonzero(rounds >= 0)
    order = infected[np.lexsort((infected, rounds[infected]))]
    reach = rounds.copy()
    via = np.full(rounds.size, -1, dtype=np.int64)
    for v in order.tolist():
        lo, hi = dag.out_indptr[v], dag.out_indptr[v + 1]
        if lo == hi:
            continue
        infectors = dag.infector[lo:hi]
        candidate = 1 + reach[infectors]
        best = int(np.argmax(candidate))
        if candidate[best] > reach[v]:
            reach[v] = candidate[best]
            via[v] = infectors[best]
        if reach[v] > rounds[v]:
            path = [v]
            while via[path[-1]] >= 0:
                path.append(int(via[path[-1]]))
            return PathCheck(False, path)
    return PathCheck(True)


def sum_of_top_thresholds(k: int, s: int) -> int:
    """k + (k - 1) + ... + (k - s + 1)."""
    return sum(k - i for i in range(s))


@dataclass
class EitherOrVerdict:
    verdict: str  # "intersects", "heavy-subset" or "violation"
    witness: Set[int] = field(default_factory=set)
    witness_case: Optional[int] = None
    long_ties: int = 0
    connected: bool = False
    long_tie_checks: int = 0
    failures: List[str] = field(default_factory=list)


def _is_connected(graph: SmallWorldGraph, nodes: Set[int]) -> bool:
    if not nodes:
        return False
    g = nx.Graph()
    g.add_nodes_from(nodes)
    for u in nodes:
        for w in graph.undirected_neighbors(u).tolist():
            if w in nodes:
                g.add_edge(u, w)
    return nx.is_connected(g)


def check_either_or(graph: SmallWorldGraph, dag: InfectionDag, A: Iterable[int], B: Iterable[int], k: int) -> EitherOrVerdict:
    """
    Decide which branch of the either-or dichotomy a K^W run lands in.

    Either the seed cluster A meets A(B), or a connected set of at most k^2 - k + 1 nodes carries at least
    C(k + 1, 2) long ties. The witness is built the way the dichotomy is argued: the first node v0 in
    infection order inside some A(v), v in B, with |A(v0)| >= k, and otherwise A(B) itself. On the
    no-intersection branch the long-tie lower bound k + (k - 1) + ... is also checked for every single
    node of A(B) and for B.
    """
    if graph.variant is not Variant.W or not dag.certified:
        raise PreconditionError("The either-or dichotomy is only certified on K^W runs")
    A = {int(a) for a in A}
    B = sorted({int(b) for b in B})
    rounds = dag.trace.infected_round
    if any(rounds[b] < 0 for b in B):
        raise PreconditionError("Cluster B must be fully infected")

    closure_b = short_closure(dag, B)
    if A & closure_b:
        return EitherOrVerdict("intersects")

    failures = []
    checks = 0
    for v in sorted(closure_b, key=dag.topological_key):
        closure_v = short_closure(dag, [v])
        s = min(k, len(closure_v))
        found = count_long_ties(graph, closure_v, dag.threshold)
        checks += 1
        if found < sum_of_top_thresholds(k, s):
            failures.append(f"L({{{v}}})={found} < {sum_of_top_thresholds(k, s)} with |A(v)|={len(closure_v)}")
    found_b = count_long_ties(graph, closure_b, dag.threshold)
    checks += 1
    if found_b < sum_of_top_thresholds(k, min(k, len(closure_b))):
        failures.append(f"L(B)={found_b} < {sum_of_top_thresholds(k, min(k, len(closure_b)))}")

    witness, case = None, None
    for v in sorted(B, key=dag.topological_key):
        closure_v = short_closure(dag, [v])
        if len(closure_v) < k:
            continue
        for v0 in sorted(closure_v, key=dag.topological_key):
            closure_v0 = short_closure(dag, [v0])
            if len(closure_v0) >= k:
                witness, case = closure_v0, 1
                break
        break
    if witness is None:
        witness, case = closure_b, 2

    size_bound = k * k - k + 1
    needed = k * (k + 1) // 2
    found = count_long_ties(graph, witness, dag.threshold)
    connected = _is_connected(graph, witness)
    certified = connected and len(witness) <= size_bound and found >= needed
    if not certified:
        failures.append(f"witness of case {case}: size {len(witness)} (bound {size_bound}), "
                        f"long ties {found} (need {needed}), connected={connected}")
    verdict = "heavy-subset" if certified and not failures else "violation"
    if verdict == "violation":
        logger.warning("Either-or check failed: %s", "; ".join(failures))
    return EitherOrVerdict(verdict, witness=set(witness), witness_case=case, long_ties=found,
                           connected=connected, long_tie_checks=checks, failures=failures)
