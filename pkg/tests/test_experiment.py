import math

import pytest

from manetq.config import ScenarioConfig
from manetq.experiment import (ConfigMismatch, check_comparable, compare, metric_value,
                               protocol_configs, run_scenario)
from manetq.metrics import CSV_HEADER

SMALL = ScenarioConfig(nodes=12, sim_time=20.0)


def test_cardinality_and_files(tmp_path):
    cmp = compare(protocol_configs(SMALL, ["dsr", "nfpqr", "nfpqr-clustered"]), [1, 2])
    assert len(cmp.runs) == 6
    paths = cmp.write(tmp_path)
    runs = (tmp_path / "runs.csv").read_text().splitlines()
    assert runs[0] == CSV_HEADER
    assert len(runs) == 1 + 6 * (SMALL.periods + 1)
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0] == "metric,period,protocol,wins,seeds"
    assert len(summary) == 1 + 6 * 3
    assert {p.name for p in paths} == {"runs.csv", "summary.csv", "lifetimes.csv"}


def test_same_protocol_twice_is_reflexive():
    cmp = compare([SMALL, SMALL], [3])
    assert cmp.labels == ["dsr", "dsr#2"]
    a, b = cmp.report("dsr", 3), cmp.report("dsr#2", 3)
    assert a.csv_lines(header=False) == b.csv_lines(header=False)
    assert cmp.winner("mean_delay_s", 3) is None


def test_parallel_matches_serial():
    cfgs = protocol_configs(SMALL, ["dsr", "nfpqr"])
    serial = compare(cfgs, [1, 2])
    parallel = compare(cfgs, [1, 2], jobs=2)
    assert serial.merged_csv_text() == parallel.merged_csv_text()


def test_mismatch_rejected():
    with pytest.raises(ConfigMismatch) as err:
        check_comparable([SMALL, SMALL.with_values(nodes=13, protocol="nfpqr")])
    assert err.value.fields == ["nodes"]
    with pytest.raises(ValueError):
        check_comparable([])


def test_metric_directions():
    report, _ = run_scenario(SMALL.with_values(traffic__flows=0))
    assert metric_value(report, "lifetime_s") == math.inf
    assert metric_value(report, "mean_delay_s") == math.inf
    assert metric_value(report, "throughput_bps", period=1) == 0.0


def test_run_scenario_writes(tmp_path):
    report, path = run_scenario(SMALL, tmp_path / "sub" / "out.csv", tmp_path / "t.trace")
    assert path.read_text() == report.csv_text()
    assert (tmp_path / "t.trace").stat().st_size > 0
