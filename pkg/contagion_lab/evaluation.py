import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, NamedTuple, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from .analytics import fit_scaling_exponent
from .config import ExperimentSpec
from .Diagnostics.censuses import long_tie_block_census, wide_bridge_census
from .Diagnostics.recursive_spreading import recursive_spreading_trial
from .Dynamics.contagion_engine import run_contagion
from .Dynamics.infection_dag import build_dag, check_either_or, check_path_time_consistency, validate_dag
from .errors import FitError, SchemaError, SweepIOError
from .Geometry.torus import Coord
from .Models.factory import generate
from .Models.small_world_graph import Variant
from .utilities import derive_seed, ensure_parent_dir, to_json, write_json

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ["variant", "L", "n", "m", "k", "gamma", "replica", "seed", "covered", "rounds", "coverage",
                  "wall_time", "error", "diagnostics"]
SUMMARY_COLUMNS = ["variant", "L", "n", "m", "k", "gamma", "replicas", "median_rounds", "mean_rounds",
                   "coverage_rate"]
EXPONENT_COLUMNS = ["variant", "m", "k", "gamma", "exponent", "stderr", "r_squared", "points"]
TIMING_FIELDS = ("wall_time",)


@dataclass
class ExperimentRecord:
    variant: str
    L: int
    n: int
    m: int
    k: int
    gamma: float
    replica: int
    seed: int
    covered: bool
    rounds: Optional[int]  # None when the cascade did not cover the torus
    coverage: float
    wall_time: float
    error: Optional[str] = None
    diagnostics: Dict = field(default_factory=dict)

    def to_row(self) -> dict:
        row = asdict(self)
        row["diagnostics"] = to_json(self.diagnostics)
        return row

    def without_timing(self) -> dict:
        row = asdict(self)
        for name in TIMING_FIELDS:
            row.pop(name)
        return row


def origin_cluster(geom, k: int) -> List[int]:
    return [geom.node_id(c) for c in geom.canonical_seed_cluster(Coord(0, 0), k)]


def far_cluster(geom, k: int) -> List[int]:
    """k-seed cluster a third of the torus away from the origin cluster."""
    return [geom.node_id(c) for c in geom.canonical_seed_cluster(Coord(0, geom.side // 3), k)]


def attach_diagnostics(spec: ExperimentSpec, graph, trace, seeds, seed: int) -> dict:
    k = spec.k
    out = {}
    if "dag" in spec.diagnostics and trace.infected_count > len(seeds):
        dag = build_dag(graph, trace, k, spec.epsilon)
        out["dag_problems"] = validate_dag(dag)
        out["path_consistent"] = check_path_time_consistency(dag, trace).passed
        out["long_edges"] = int(dag.is_long.sum())
        B = far_cluster(graph.geom, k)
        if graph.variant is Variant.W and np.all(trace.infected_round[B] >= 0):
            verdict = check_either_or(graph, dag, seeds, B, k)
            out["either_or"] = verdict.verdict
            out["either_or_failures"] = verdict.failures
    if "census" in spec.diagnostics:
        census = wide_bridge_census(graph, Coord(0, 0), spec.delta, k)
        out["z1"], out["z2"] = census.z1, census.z2
    if "blocks" in spec.diagnostics:
        blocks = long_tie_block_census(graph, spec.delta, k, trace)
        out["block_violators"] = len(blocks.violating_nodes)
        out["block_adjacency_passed"] = blocks.adjacency_passed
    if "trial" in spec.diagnostics:
        estimate = recursive_spreading_trial(graph.side, graph.m, graph.gamma, graph.variant, k, spec.delta,
                                             spec.trials, derive_seed(seed, 0))
        out["trial_success_rate"] = estimate.success_rate
        out["trial_ci95"] = list(estimate.ci95)
    return out


def run_replica(spec: ExperimentSpec, point_index: int, variant: str, L: int, gamma: float,
                replica: int) -> ExperimentRecord:
    """One grid point, one replica. Failures are captured in the record instead of propagating."""
    seed = derive_seed(spec.base_seed, point_index, replica)
    record = ExperimentRecord(variant=variant, L=L, n=L * L, m=spec.m, k=spec.k, gamma=gamma, replica=replica,
                              seed=seed, covered=False, rounds=None, coverage=0.0, wall_time=0.0)
    tic = time.time()
    try:
        graph = generate(L, spec.m, gamma, variant, seed)
        seeds = origin_cluster(graph.geom, spec.k)
        trace = run_contagion(graph, spec.k, seeds, max_rounds=spec.rounds_cap(L))
        record.covered = trace.covered
        record.rounds = trace.rounds_to_full()
        record.coverage = trace.coverage
        record.diagnostics = attach_diagnostics(spec, graph, trace, seeds, seed)
    except Exception as e:
        logger.warning("Point %s replica %d failed: %s", (variant, L, gamma), replica, e)
        record.error = f"{type(e).__name__}: {e}"
    record.wall_time = time.time() - tic
    return record


def run_sweep(spec: ExperimentSpec, n_jobs: Optional[int] = None, progress: bool = True) -> List[ExperimentRecord]:
    """
    Run every (point, replica) of the spec.

    Replica seeds are derive_seed(base_seed, point_index, replica), so the outcome does not depend on n_jobs.
    Records come back in point-major order.
    """
    spec.validate()
    tasks = [(i, v, L, g, r) for i, (v, L, g) in enumerate(spec.points()) for r in range(spec.replicas)]
    logger.info("Sweeping %d points x %d replicas", len(spec.points()), spec.replicas)
    n_jobs = spec.n_jobs if n_jobs is None else n_jobs
    records = Parallel(n_jobs=n_jobs)(
        delayed(run_replica)(spec, i, v, L, g, r) for i, v, L, g, r in tqdm(tasks, disable=not progress)
    )
    failed = sum(1 for rec in records if rec.error is not None)
    if failed:
        logger.warning("%d of %d replicas failed", failed, len(records))
    return records


class Summary(NamedTuple):
    records: pd.DataFrame
    summary: pd.DataFrame
    exponents: pd.DataFrame


def records_to_frame(records) -> pd.DataFrame:
    rows = []
    for rec in records:
        if isinstance(rec, ExperimentRecord):
            rows.append(rec.to_row())
        elif isinstance(rec, dict):
            if set(rec) != set(RECORD_COLUMNS):
                raise SchemaError(f"Record keys {sorted(rec)} do not match the schema {RECORD_COLUMNS}")
            row = dict(rec)
            if not isinstance(row["diagnostics"], str):
                row["diagnostics"] = to_json(row["diagnostics"])
            rows.append(row)
        else:
            raise SchemaError(f"Cannot summarize a {type(rec).__name__}")
    frame = pd.DataFrame(rows, columns=RECORD_COLUMNS)
    frame["rounds"] = frame["rounds"].astype("Int64")
    frame["covered"] = frame["covered"].astype(bool)
    return frame


def summarize(records) -> Summary:
    """
    Per-point and per-gamma tables.

    median_rounds and mean_rounds are taken over covered replicas only (NaN when none covered). An exponent
    row is fitted for every (variant, m, k, gamma) with at least three L values having a median.
    """
    frame = records_to_frame(records)
    keys = ["variant", "L", "n", "m", "k", "gamma"]
    if frame.empty:
        return Summary(frame, pd.DataFrame(columns=SUMMARY_COLUMNS), pd.DataFrame(columns=EXPONENT_COLUMNS))

    rounds = frame["rounds"].astype("float64")
    frame_f = frame.assign(rounds_f=rounds.where(frame["covered"]))
    summary = (frame_f.groupby(keys, sort=True)
               .agg(replicas=("replica", "count"), median_rounds=("rounds_f", "median"),
                    mean_rounds=("rounds_f", "mean"), coverage_rate=("covered", "mean"))
               .reset_index())[SUMMARY_COLUMNS]

    rows = []
    for (variant, m, k, gamma), group in summary.groupby(["variant", "m", "k", "gamma"], sort=True):
        usable = group[group["median_rounds"].notna() & (group["median_rounds"] > 0)]
        if len(usable) < 3:
            continue
        try:
            fit = fit_scaling_exponent(zip(usable["n"], usable["median_rounds"]))
        except FitError as e:
            logger.warning("No exponent for %s: %s", (variant, m, k, gamma), e)
            continue
        rows.append({"variant": variant, "m": m, "k": k, "gamma": gamma, "exponent": fit.exponent,
                     "stderr": fit.stderr, "r_squared": fit.r_squared, "points": len(usable)})
    exponents = pd.DataFrame(rows, columns=EXPONENT_COLUMNS)
    return Summary(frame, summary, exponents)


def load_records(path: str) -> List[ExperimentRecord]:
    """Read records.csv back into records."""
    frame = pd.read_csv(path, dtype={"variant": str, "error": str})
    if list(frame.columns) != RECORD_COLUMNS:
        raise SchemaError(f"{path} has columns {list(frame.columns)}, expected {RECORD_COLUMNS}")
    records = []
    for row in frame.to_dict("records"):
        records.append(ExperimentRecord(
            variant=row["variant"], L=int(row["L"]), n=int(row["n"]), m=int(row["m"]), k=int(row["k"]),
            gamma=float(row["gamma"]), replica=int(row["replica"]), seed=int(row["seed"]),
            covered=bool(row["covered"]), rounds=None if pd.isna(row["rounds"]) else int(row["rounds"]),
            coverage=float(row["coverage"]), wall_time=float(row["wall_time"]),
            error=None if pd.isna(row["error"]) else row["error"],
            diagnostics=json.loads(row["diagnostics"]) if isinstance(row["diagnostics"], str) else {},
        ))
    return records


def write_outputs(records: List[ExperimentRecord], spec: ExperimentSpec, out_dir: Optional[str] = None) -> dict:
    """
    Write records.csv, summary.csv, exponents.csv and the resolved spec.

    Raises:
        SweepIOError: on any I/O failure, after writing a manifest of the files that did land.
    """
    out_dir = out_dir or spec.output_dir
    tables = summarize(records)
    targets = [
        ("records", os.path.join(out_dir, "records.csv"), lambda p: tables.records.to_csv(p, index=False)),
        ("summary", os.path.join(out_dir, "summary.csv"), lambda p: tables.summary.to_csv(p, index=False)),
        ("exponents", os.path.join(out_dir, "exponents.csv"), lambda p: tables.exponents.to_csv(p, index=False)),
        ("spec", os.path.join(out_dir, "spec.json"), lambda p: spec.save(p)),
    ]
    written = {}
    for name, path, writer in targets:
        try:
            ensure_parent_dir(path)
            writer(path)
        except OSError as e:
            manifest_path = os.path.join(out_dir, "manifest.json")
            try:
                write_json({"complete": False, "written": written, "failed": name, "reason": str(e)}, manifest_path)
            except OSError:
                manifest_path = None
            raise SweepIOError(f"Could not write {path}: {e}", manifest_path) from e
        written[name] = path
    write_json({"complete": True, "written": written}, os.path.join(out_dir, "manifest.json"))
    logger.info("Wrote sweep outputs to %s", out_dir)
    return written
