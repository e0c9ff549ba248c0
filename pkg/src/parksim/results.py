"""Result export: fixed-order CSV files plus a metadata sidecar.

Layout written under one output directory, after all batches finish::

    metadata.toml                   seed, version, scenario hash, points
    summary.csv                     one row per (sweep point, batch)
    aggregate.csv                   one row per sweep point (mean/std)
    points/<label>/delay.csv        one row per observed status change
    points/<label>/energy.csv       one row per (batch, node)
    points/<label>/routerload.csv   one row per (batch, full-function node)

Column orders below are the documented contract; the plotting frontend
and any spreadsheet rely on them byte for byte. Reruns of the same
scenario and seed reproduce every file identically.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import tomlkit

from . import __version__
from .scenario import Scenario, SweepPoint
from .simulate import RunResult

DELAY_COLUMNS = ("batch", "sensor_id", "status_changed_at", "delay_s",
                 "cycles_waited", "censored")
ENERGY_COLUMNS = ("batch", "node_id", "role", "joules", "tx_s", "rx_s",
                  "cs_s", "off_s", "switches")
ROUTERLOAD_COLUMNS = ("batch", "node_id", "role", "x_m", "y_m", "handled")
METRIC_KEYS = (
    "generated", "delivered", "dropped", "censored", "attempts",
    "data_collisions", "pdr", "p1", "p2", "first_cycle_fraction",
    "mean_delay_s", "eq3_delay_s", "analytic_delay_s",
    "sensor_mean_j", "sensor_std_j", "sensor_total_j", "gateway_j",
    "router_load_max", "router_load_mean",
)


def write_results(out_dir: str | Path, scenario: Scenario,
                  points: list[SweepPoint],
                  results: dict[str, list[RunResult]]) -> Path:
    """Serialize a finished scenario run; the single writer."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sweep_keys = list(scenario.sweep)

    _write_metadata(out / "metadata.toml", scenario, points)
    _write_summary(out / "summary.csv", sweep_keys, points, results)
    _write_aggregate(out / "aggregate.csv", sweep_keys, points, results)
    for point in points:
        pdir = out / "points" / point.label
        pdir.mkdir(parents=True, exist_ok=True)
        _write_delay(pdir / "delay.csv", results[point.label])
        _write_energy(pdir / "energy.csv", results[point.label])
        _write_routerload(pdir / "routerload.csv", results[point.label])
    return out


def _write_metadata(path: Path, scenario: Scenario,
                    points: list[SweepPoint]) -> None:
    doc = tomlkit.document()
    doc["name"] = scenario.name
    doc["version"] = __version__
    doc["seed"] = int(scenario.seed)
    doc["batches"] = int(scenario.batches)
    doc["sim_time_s"] = float(scenario.sim_time_s)
    doc["scenario_hash"] = scenario.hash()
    doc["sweep_keys"] = list(scenario.sweep)
    doc["points"] = [p.label for p in points]
    doc["scenario"] = scenario.canonical()
    path.write_text(tomlkit.dumps(doc))


def _open_writer(path: Path, header: tuple):
    fh = open(path, "w", newline="")
    writer = csv.writer(fh)
    writer.writerow(header)
    return fh, writer


def _write_summary(path: Path, sweep_keys: list[str],
                   points: list[SweepPoint],
                   results: dict[str, list[RunResult]]) -> None:
    header = ("point", "batch", *sweep_keys, *METRIC_KEYS)
    fh, writer = _open_writer(path, header)
    with fh:
        for point in points:
            swept = [point.overrides.get(k, "") for k in sweep_keys]
            for res in results[point.label]:
                m = res.metrics()
                writer.writerow([point.label, res.batch, *swept,
                                 *(m[k] for k in METRIC_KEYS)])


def _write_aggregate(path: Path, sweep_keys: list[str],
                     points: list[SweepPoint],
                     results: dict[str, list[RunResult]]) -> None:
    header = ["point", *sweep_keys]
    for key in METRIC_KEYS:
        header += [f"{key}_mean", f"{key}_std"]
    fh, writer = _open_writer(path, tuple(header))
    with fh:
        for point in points:
            swept = [point.overrides.get(k, "") for k in sweep_keys]
            rows = [r.metrics() for r in results[point.label]]
            cells = [point.label, *swept]
            for key in METRIC_KEYS:
                vals = np.array([row[key] for row in rows], dtype=float)
                cells.append(float(np.mean(vals)))
                cells.append(float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0)
            writer.writerow(cells)


def _write_delay(path: Path, runs: list[RunResult]) -> None:
    fh, writer = _open_writer(path, DELAY_COLUMNS)
    with fh:
        for res in runs:
            for s in res.delay_samples:
                writer.writerow([res.batch, s.sensor, s.status_changed_at,
                                 s.delay_s, s.cycles_waited,
                                 1 if s.censored else 0])


def _write_energy(path: Path, runs: list[RunResult]) -> None:
    fh, writer = _open_writer(path, ENERGY_COLUMNS)
    with fh:
        for res in runs:
            for node_id in sorted(res.node_energy):
                e = res.node_energy[node_id]
                writer.writerow([res.batch, node_id, e["role"], e["joules"],
                                 e["tx_s"], e["rx_s"], e["cs_s"], e["off_s"],
                                 e["switches"]])


def _write_routerload(path: Path, runs: list[RunResult]) -> None:
    """Unique packets handled per full-function node; the gateway row
    counts final deliveries."""
    fh, writer = _open_writer(path, ROUTERLOAD_COLUMNS)
    with fh:
        for res in runs:
            gateway_id = next(n for n, e in res.node_energy.items()
                              if e["role"] == "gateway")
            e = res.node_energy[gateway_id]
            writer.writerow([res.batch, gateway_id, e["role"],
                             e["x_m"], e["y_m"], res.delivered])
            for node_id in sorted(res.router_load):
                e = res.node_energy[node_id]
                writer.writerow([res.batch, node_id, e["role"], e["x_m"],
                                 e["y_m"], res.router_load[node_id]])
