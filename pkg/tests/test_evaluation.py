import json

import pandas as pd
import pytest

from contagion_lab.config import CONFIG_SCHEMA_VERSION, ExperimentSpec
from contagion_lab.errors import ConfigurationError, SchemaError, SweepIOError
from contagion_lab.evaluation import (RECORD_COLUMNS, ExperimentRecord, load_records, records_to_frame, run_replica,
                                      run_sweep, summarize, write_outputs)


def record(L=8, replica=0, covered=True, rounds=5, gamma=2.2, **kwargs):
    fields = dict(variant="W", L=L, n=L * L, m=2, k=2, gamma=gamma, replica=replica, seed=replica,
                  covered=covered, rounds=rounds if covered else None, coverage=1.0 if covered else 0.5,
                  wall_time=0.01)
    fields.update(kwargs)
    return ExperimentRecord(**fields)


@pytest.fixture
def mixed_records():
    covered = [True, True, False, True, False, True]
    rounds = [5, 7, None, 9, None, 11]
    point_a = [record(8, i, c, r) for i, (c, r) in enumerate(zip(covered, rounds))]
    point_b = [record(16, i, False) for i in range(4)]
    return point_a + point_b


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        ExperimentSpec(m=1, k=2).validate()
    with pytest.raises(ConfigurationError):
        ExperimentSpec(diagnostics=["plots"]).validate()
    with pytest.raises(ConfigurationError):
        ExperimentSpec(replicas=0).validate()
    with pytest.raises(ConfigurationError):
        ExperimentSpec(epsilon=0.6).validate()
    with pytest.raises(ConfigurationError):
        ExperimentSpec(L_values=[3]).validate()
    with pytest.raises(ValueError):
        ExperimentSpec(variants=["X"]).validate()
    assert ExperimentSpec(variants=["w"]).validate().variants == ["W"]


def test_points_and_caps():
    spec = ExperimentSpec(variants=["W", "I"], L_values=[8, 16], gammas=[2.2, 3.2])
    points = spec.points()
    assert points[:3] == [("W", 8, 2.2), ("W", 16, 2.2), ("W", 8, 3.2)]
    assert len(points) == 8
    assert spec.rounds_cap(16) == 64
    assert spec.with_overrides(max_rounds=10, m=None).rounds_cap(16) == 10
    assert spec.with_overrides(m=None).m == 2


def test_spec_file_round_trip(tmp_path):
    spec = ExperimentSpec(L_values=[8, 12], gammas=[2.2, 2.8], diagnostics=["census"], output_dir=str(tmp_path))
    path = str(tmp_path / "spec.json")
    spec.save(path)
    assert json.loads((tmp_path / "spec.json").read_text())["schema_version"] == CONFIG_SCHEMA_VERSION
    assert ExperimentSpec.load(path) == spec


def test_spec_dict_checks():
    data = ExperimentSpec().to_dict()
    with pytest.raises(ConfigurationError):
        ExperimentSpec.from_dict({**data, "schema_version": 99})
    with pytest.raises(ConfigurationError):
        ExperimentSpec.from_dict({**data, "colour": "red"})


def test_summary_counts_coverage_by_hand(mixed_records):
    tables = summarize(mixed_records)
    summary = tables.summary.set_index("L")
    assert summary.loc[8, "replicas"] == 6
    assert summary.loc[8, "coverage_rate"] == pytest.approx(4 / 6)
    assert summary.loc[8, "median_rounds"] == 8.0
    assert summary.loc[8, "mean_rounds"] == 8.0
    assert summary.loc[16, "coverage_rate"] == 0.0
    assert pd.isna(summary.loc[16, "median_rounds"])
    assert tables.exponents.empty
    assert tables.records["rounds"].isna().sum() == 6


def test_exponent_fitted_over_three_sizes():
    records = [record(L, 0, True, L) for L in (8, 16, 32)]
    exponents = summarize(records).exponents
    assert len(exponents) == 1
    assert exponents.loc[0, "exponent"] == pytest.approx(0.5)
    assert exponents.loc[0, "points"] == 3


def test_records_schema_checked():
    with pytest.raises(SchemaError):
        records_to_frame([{"variant": "W"}])
    with pytest.raises(SchemaError):
        records_to_frame([42])
    row = record().to_row()
    assert list(records_to_frame([row]).columns) == RECORD_COLUMNS


def test_empty_summary():
    tables = summarize([])
    assert tables.summary.empty and tables.exponents.empty


def test_outputs_round_trip(tmp_path, mixed_records):
    spec = ExperimentSpec(output_dir=str(tmp_path))
    mixed_records[0].error = "ConfigurationError: boom"
    mixed_records[1].diagnostics = {"z1": 3}
    written = write_outputs(mixed_records, spec)
    assert set(written) == {"records", "summary", "exponents", "spec"}
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["complete"] is True
    assert load_records(written["records"]) == mixed_records


def test_unwritable_output_dir(tmp_path, mixed_records):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    with pytest.raises(SweepIOError) as info:
        write_outputs(mixed_records, ExperimentSpec(), str(blocker))
    assert info.value.manifest_path is None


def test_failed_replica_is_recorded():
    rec = run_replica(ExperimentSpec(), 0, "W", 3, 2.2, 0)
    assert rec.error.startswith("ConfigurationError")
    assert not rec.covered and rec.rounds is None


def test_sweep_is_reproducible(tmp_path):
    spec = ExperimentSpec(L_values=[8, 10], gammas=[2.2], replicas=2, output_dir=str(tmp_path))
    first = run_sweep(spec, progress=False)
    second = run_sweep(spec, n_jobs=2, progress=False)
    assert [(r.L, r.replica) for r in first] == [(8, 0), (8, 1), (10, 0), (10, 1)]
    assert all(r.covered and r.error is None for r in first)
    assert [r.without_timing() for r in first] == [r.without_timing() for r in second]
    assert "wall_time" not in first[0].without_timing()


def test_sweep_with_every_diagnostic(tmp_path):
    spec = ExperimentSpec(L_values=[16], gammas=[2.8], replicas=1, trials=2,
                          diagnostics=["dag", "census", "blocks", "trial"], output_dir=str(tmp_path))
    (rec,) = run_sweep(spec, progress=False)
    assert rec.error is None
    diag = rec.diagnostics
    assert diag["dag_problems"] == [] and diag["path_consistent"]
    assert diag["either_or"] in ("intersects", "heavy-subset")
    assert {"z1", "z2", "block_violators", "trial_success_rate", "trial_ci95"} <= set(diag)
