"""Output directory layout, column contracts and rerun reproducibility."""

import csv
import math
from pathlib import Path

import numpy as np
import pytest

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from parksim.results import (
    DELAY_COLUMNS,
    ENERGY_COLUMNS,
    METRIC_KEYS,
    ROUTERLOAD_COLUMNS,
    write_results,
)
from parksim.scenario import scenario_from_dict, validate_scenario
from parksim.simulate import run_replications


@pytest.fixture(scope="module")
def tiny_run():
    sc = scenario_from_dict({
        "name": "tiny",
        "sim_time_s": 600.0,
        "batches": 2,
        "topology": {"kind": "cross", "n_sensors": 12},
        "traffic": {"mean_cycle_s": 1200.0},
        "sweep": {"mode": ["schedule", "contention"]},
    })
    points = validate_scenario(sc)
    results = {p.label: run_replications(p.spec, sc.batches) for p in points}
    return sc, points, results


def _read_csv(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_layout_and_headers(tmp_path, tiny_run):
    sc, points, results = tiny_run
    out = write_results(tmp_path / "out", sc, points, results)
    assert (out / "metadata.toml").exists()
    header, rows = _read_csv(out / "summary.csv")
    assert header == ["point", "batch", "mode", *METRIC_KEYS]
    assert len(rows) == len(points) * sc.batches

    agg_header, agg_rows = _read_csv(out / "aggregate.csv")
    assert agg_header[:2] == ["point", "mode"]
    assert len(agg_header) == 2 + 2 * len(METRIC_KEYS)
    assert len(agg_rows) == len(points)

    for p in points:
        pdir = out / "points" / p.label
        d_header, d_rows = _read_csv(pdir / "delay.csv")
        assert tuple(d_header) == DELAY_COLUMNS
        assert all(r[-1] in ("0", "1") for r in d_rows)
        e_header, e_rows = _read_csv(pdir / "energy.csv")
        assert tuple(e_header) == ENERGY_COLUMNS
        assert len(e_rows) == sc.batches * 13  # every node, every batch
        r_header, _ = _read_csv(pdir / "routerload.csv")
        assert tuple(r_header) == ROUTERLOAD_COLUMNS


def test_aggregate_matches_summary_statistics(tmp_path, tiny_run):
    sc, points, results = tiny_run
    out = write_results(tmp_path / "out", sc, points, results)
    s_header, s_rows = _read_csv(out / "summary.csv")
    a_header, a_rows = _read_csv(out / "aggregate.csv")
    pdr_col = s_header.index("pdr")
    mean_col = a_header.index("pdr_mean")
    std_col = a_header.index("pdr_std")
    for a_row in a_rows:
        label = a_row[0]
        vals = np.array([float(r[pdr_col]) for r in s_rows if r[0] == label])
        assert float(a_row[mean_col]) == pytest.approx(vals.mean())
        assert float(a_row[std_col]) == pytest.approx(vals.std(ddof=1))


def test_gateway_row_reports_deliveries(tmp_path, tiny_run):
    sc, points, results = tiny_run
    out = write_results(tmp_path / "out", sc, points, results)
    for p in points:
        _, rows = _read_csv(out / "points" / p.label / "routerload.csv")
        gw_rows = [r for r in rows if r[2] == "gateway"]
        assert len(gw_rows) == sc.batches
        for r in gw_rows:
            res = results[p.label][int(r[0])]
            assert int(r[5]) == res.delivered


def test_metadata_identifies_the_scenario(tmp_path, tiny_run):
    sc, points, results = tiny_run
    out = write_results(tmp_path / "out", sc, points, results)
    meta = tomllib.loads((out / "metadata.toml").read_text())
    assert meta["name"] == "tiny"
    assert meta["scenario_hash"] == sc.hash()
    assert meta["points"] == [p.label for p in points]
    assert meta["sweep_keys"] == ["mode"]
    assert meta["batches"] == 2
    assert meta["scenario"]["traffic"]["mean_cycle_s"] == 1200.0


def test_rewrites_are_byte_identical(tmp_path, tiny_run):
    sc, points, results = tiny_run
    a = write_results(tmp_path / "a", sc, points, results)
    b = write_results(tmp_path / "b", sc, points, results)
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_summary_contains_no_surprise_nans_for_schedule(tmp_path, tiny_run):
    sc, points, results = tiny_run
    for res in results["mode=schedule"]:
        m = res.metrics()
        for key in ("pdr", "p1", "mean_delay_s", "eq3_delay_s", "sensor_mean_j"):
            assert not math.isnan(m[key]), key
