import argparse
import logging
import sys
from typing import List, Optional

import pandas as pd

from . import analytics
from .config import DEFAULT_DELTA, DEFAULT_SEED, ExperimentSpec
from .Diagnostics.censuses import heavy_connected_subset_search, long_tie_block_census, wide_bridge_census
from .Diagnostics.recursive_spreading import recursive_spreading_trial
from .Dynamics.contagion_engine import ContagionTrace, run_contagion
from .Dynamics.infection_dag import (DEFAULT_EPSILON, build_dag, check_either_or, check_path_time_consistency,
                                     validate_dag)
from .errors import ConfigurationError
from .evaluation import far_cluster, origin_cluster, run_sweep, write_outputs
from .Geometry.torus import Coord
from .Models.factory import generate
from .Models.small_world_graph import SmallWorldGraph
from .utilities import default_output_dir, measure_memory_usage, to_json, write_json

logger = logging.getLogger(__name__)


class ContagionLab:
    """Entry point tying graph generation, contagion runs, diagnostics and sweeps together."""

    def __init__(self, output_dir: Optional[str] = None, n_jobs: int = 1) -> None:
        self.explicit_output_dir = output_dir
        self.output_dir = output_dir or default_output_dir()
        self.n_jobs = n_jobs

    # graphs

    def generate_graph(self, L: int, m: int, gamma: float, variant: str = "W", seed: int = DEFAULT_SEED,
                       out: Optional[str] = None, edge_list: Optional[str] = None) -> SmallWorldGraph:
        logger.info("Generating K^%s graph with L=%d, m=%d, gamma=%s", variant, L, m, gamma)
        graph = generate(L, m, gamma, variant, seed)
        if out:
            graph.save(out)
        if edge_list:
            graph.export_edge_list(edge_list)
        return graph

    def load_graph(self, path: str) -> SmallWorldGraph:
        return SmallWorldGraph.load(path)

    # runs

    def run(self, graph: SmallWorldGraph, k: int, seeds=None, max_rounds: Optional[int] = None,
            profile_memory: bool = False):
        """
        Run a contagion from the canonical k-seed cluster at the origin unless seeds are given.

        Returns:
            tuple: (trace, peak memory in MB or None)
        """
        if seeds is None:
            seeds = origin_cluster(graph.geom, k)
        if profile_memory:
            return measure_memory_usage(run_contagion, graph, k, seeds, max_rounds)
        return run_contagion(graph, k, seeds, max_rounds), None

    def diagnose_dag(self, graph: SmallWorldGraph, trace: ContagionTrace, epsilon: float = DEFAULT_EPSILON,
                     out: Optional[str] = None) -> dict:
        dag = build_dag(graph, trace, trace.k, epsilon)
        if out:
            dag.save_csv(out)
        path = check_path_time_consistency(dag, trace)
        return {"edges": dag.edge_count, "long_edges": int(dag.is_long.sum()), "threshold": dag.threshold,
                "certified": dag.certified, "problems": validate_dag(dag), "path_consistent": path.passed,
                "counterexample": path.counterexample}

    def diagnose_either_or(self, graph: SmallWorldGraph, trace: ContagionTrace,
                           epsilon: float = DEFAULT_EPSILON) -> dict:
        k = trace.k
        dag = build_dag(graph, trace, k, epsilon)
        verdict = check_either_or(graph, dag, trace.seeds.tolist(), far_cluster(graph.geom, k), k)
        return {"verdict": verdict.verdict, "witness_case": verdict.witness_case, "witness": sorted(verdict.witness),
                "long_ties": verdict.long_ties, "failures": verdict.failures}

    def diagnose_census(self, graph: SmallWorldGraph, k: int, delta: float = DEFAULT_DELTA,
                        epsilon: float = DEFAULT_EPSILON, trace: Optional[ContagionTrace] = None,
                        heavy: bool = False) -> dict:
        report = {"wide_bridges": wide_bridge_census(graph, Coord(0, 0), delta, k).to_dict(),
                  "blocks": long_tie_block_census(graph, delta, k, trace).to_dict()}
        if heavy:
            witness = heavy_connected_subset_search(graph, k, epsilon)
            report["heavy_subset"] = witness.to_dict() if witness else None
        return report

    def trial(self, L: int, m: int, gamma: float, variant: str, k: int, delta: float, trials: int,
              seed: int = DEFAULT_SEED):
        return recursive_spreading_trial(L, m, gamma, variant, k, delta, trials, seed, n_jobs=self.n_jobs)

    # sweeps and analytics

    def sweep(self, spec: ExperimentSpec):
        """Run a sweep and write its outputs; a directory given to the lab overrides spec.output_dir."""
        spec = spec.with_overrides(output_dir=self.explicit_output_dir)
        records = run_sweep(spec, n_jobs=self.n_jobs)
        write_outputs(records, spec, spec.output_dir)
        return records

    def predict(self, variants, ks, gammas) -> pd.DataFrame:
        return analytics.predict_table(variants, ks, gammas)

    def fit(self, csv_path: str) -> analytics.ScalingFit:
        frame = pd.read_csv(csv_path)
        if not {"n", "T"} <= set(frame.columns):
            raise ConfigurationError(f"{csv_path} needs columns n and T, got {list(frame.columns)}")
        return analytics.fit_scaling_exponent(zip(frame["n"], frame["T"]))


# ---------------------------------------------------------------------- CLI


def _add_graph_args(parser: argparse.ArgumentParser, graph_file: bool = True) -> None:
    if graph_file:
        parser.add_argument("--graph", help="Graph file written by generate")
    parser.add_argument("--L", type=int, default=32)
    parser.add_argument("--m", type=int, default=2)
    parser.add_argument("--gamma", type=float, default=2.2)
    parser.add_argument("--variant", default="W", choices=["W", "I"])
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contagion_lab",
                                     description="k-complex contagions on Kleinberg small-world graphs")
    parser.add_argument("--log-level", default="INFO")
    parser.add_argument("--output-dir", default=None)
    parser.add_argument("--n-jobs", type=int, default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Generate and save a graph")
    _add_graph_args(p, graph_file=False)
    p.add_argument("--out", required=True)
    p.add_argument("--edge-list")

    p = sub.add_parser("run", help="Run one contagion")
    _add_graph_args(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--trace-csv")
    p.add_argument("--summary-json")
    p.add_argument("--profile-memory", action="store_true")

    p = sub.add_parser("sweep", help="Run a parameter sweep from a JSON config")
    p.add_argument("--config")
    p.add_argument("--variants", nargs="+")
    p.add_argument("--L-values", dest="L_values", type=int, nargs="+")
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--gammas", type=float, nargs="+")
    p.add_argument("--replicas", type=int)
    p.add_argument("--base-seed", dest="base_seed", type=int)
    p.add_argument("--max-rounds", dest="max_rounds", type=int)
    p.add_argument("--diagnostics", nargs="*")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--no-progress", action="store_true")

    p = sub.add_parser("diagnose", help="DAG checks, censuses or the either-or check on one run")
    p.add_argument("what", choices=["dag", "census", "eitheror"])
    _add_graph_args(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--heavy", action="store_true", help="Also search for a heavy connected subset")
    p.add_argument("--out", help="CSV for the DAG, JSON for the other reports")

    p = sub.add_parser("trial", help="Recursive-spreading Monte Carlo")
    _add_graph_args(p, graph_file=False)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--trials", type=int, default=100)

    p = sub.add_parser("predict", help="Regime table as CSV")
    p.add_argument("--variant", nargs="+", default=["W", "I"])
    p.add_argument("--k", type=int, nargs="+", default=[2])
    p.add_argument("--gamma-min", type=float, default=0.0)
    p.add_argument("--gamma-max", type=float, default=4.0)
    p.add_argument("--gamma-step", type=float, default=0.05)

    p = sub.add_parser("fit", help="Fit log T against log n")
    p.add_argument("--csv", required=True)
    return parser


def _graph_from_args(lab: ContagionLab, args) -> SmallWorldGraph:
    if getattr(args, "graph", None):
        return lab.load_graph(args.graph)
    return lab.generate_graph(args.L, args.m, args.gamma, args.variant, args.seed)


def _emit(report: dict, out: Optional[str] = None) -> None:
    if out:
        write_json(report, out)
    print(to_json(report))


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    lab = ContagionLab(args.output_dir, args.n_jobs)
    try:
        return dispatch(lab, args)
    except (ValueError, OSError) as e:
        logger.error("%s", e)
        return 1


def dispatch(lab: ContagionLab, args) -> int:
    if args.command == "generate":
        lab.generate_graph(args.L, args.m, args.gamma, args.variant, args.seed, out=args.out, edge_list=args.edge_list)
        return 0

    if args.command == "run":
        graph = _graph_from_args(lab, args)
        trace, memory = lab.run(graph, args.k, max_rounds=args.max_rounds, profile_memory=args.profile_memory)
        if args.trace_csv:
            trace.save_csv(args.trace_csv)
        if args.summary_json:
            trace.save_summary(args.summary_json)
        report = trace.summary()
        if memory is not None:
            report["peak_memory_mb"] = memory
        _emit(report)
        return 0

    if args.command == "sweep":
        spec = ExperimentSpec.load(args.config) if args.config else ExperimentSpec()
        overrides = {key: getattr(args, key) for key in ("variants", "L_values", "m", "k", "gammas", "replicas",
                                                         "base_seed", "max_rounds", "diagnostics", "epsilon",
                                                         "delta", "trials")}
        spec = spec.with_overrides(output_dir=args.output_dir, n_jobs=args.n_jobs, **overrides).validate()
        records = run_sweep(spec, n_jobs=args.n_jobs, progress=not args.no_progress)
        write_outputs(records, spec)
        return 0 if all(rec.error is None for rec in records) else 1

    if args.command == "diagnose":
        graph = _graph_from_args(lab, args)
        trace, _ = lab.run(graph, args.k)
        if args.what == "dag":
            _emit(lab.diagnose_dag(graph, trace, args.epsilon, out=args.out))
        elif args.what == "eitheror":
            _emit(lab.diagnose_either_or(graph, trace, args.epsilon), args.out)
        else:
            _emit(lab.diagnose_census(graph, args.k, args.delta, args.epsilon, trace, args.heavy), args.out)
        return 0

    if args.command == "trial":
        estimate = lab.trial(args.L, args.m, args.gamma, args.variant, args.k, args.delta, args.trials, args.seed)
        _emit(estimate.to_dict())
        return 0

    if args.command == "predict":
        gammas = analytics.gamma_grid(args.gamma_min, args.gamma_max, args.gamma_step)
        lab.predict(args.variant, args.k, gammas).to_csv(sys.stdout, index=False)
        return 0

    if args.command == "fit":
        _emit(lab.fit(args.csv)._asdict())
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
