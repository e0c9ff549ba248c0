"""Shared fixtures: synthetic results dirs and real parksim CLI runs."""

import csv
import shutil
import subprocess
from pathlib import Path

import pytest

METRICS = ("pdr", "mean_delay_s", "sensor_mean_j", "sensor_std_j")


def write_synthetic_results(root: Path, sweep_keys, rows, routerload=None,
                            metadata: str = 'name = "synthetic"\n') -> Path:
    """Build a minimal results dir matching the documented layout.

    rows: list of dicts with "point", sweep key values and plain metric
    values; each metric m is expanded to m_mean/m_std columns.
    """
    root.mkdir(parents=True, exist_ok=True)
    (root / "metadata.toml").write_text(metadata)
    header = ["point", *sweep_keys]
    for m in METRICS:
        header += [f"{m}_mean", f"{m}_std"]
    with open(root / "aggregate.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            out = [row["point"], *(row[k] for k in sweep_keys)]
            for m in METRICS:
                out += [row.get(f"{m}_mean", 1.0), row.get(f"{m}_std", 0.1)]
            w.writerow(out)
    for row in rows:
        pdir = root / "points" / str(row["point"])
        pdir.mkdir(parents=True, exist_ok=True)
        table = (routerload or {}).get(row["point"], [])  # role: gateway|repeater
        with open(pdir / "routerload.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("batch", "node_id", "role", "x_m", "y_m", "handled"))
            w.writerows(table)
    return root


TWO_MODE_ROWS = [
    {"point": "mode=schedule-n_sensors=12", "mode": "schedule", "n_sensors": 12,
     "mean_delay_s_mean": 2.0, "sensor_mean_j_mean": 0.20,
     "sensor_std_j_mean": 0.02},
    {"point": "mode=schedule-n_sensors=24", "mode": "schedule", "n_sensors": 24,
     "mean_delay_s_mean": 4.0, "sensor_mean_j_mean": 0.25,
     "sensor_std_j_mean": 0.02},
    {"point": "mode=contention-n_sensors=12", "mode": "contention", "n_sensors": 12,
     "mean_delay_s_mean": 0.5, "sensor_mean_j_mean": 0.30,
     "sensor_std_j_mean": 0.02},
    {"point": "mode=contention-n_sensors=24", "mode": "contention", "n_sensors": 24,
     "mean_delay_s_mean": 0.6, "sensor_mean_j_mean": 0.35,
     "sensor_std_j_mean": 0.02},
]


@pytest.fixture()
def synthetic_dir(tmp_path):
    return write_synthetic_results(tmp_path / "res", ["mode", "n_sensors"],
                                   TWO_MODE_ROWS)


# ------------------------------------------------------- real CLI runs

HAVE_PARKSIM = shutil.which("parksim") is not None

needs_parksim = pytest.mark.skipif(
    not HAVE_PARKSIM, reason="parksim CLI not on PATH")


def run_parksim(scenario_text: str, workdir: Path) -> Path:
    """Run the simulator CLI on a scenario; returns the results dir."""
    scen = workdir / "scenario.toml"
    scen.write_text(scenario_text)
    out = workdir / "results"
    subprocess.run(["parksim", "run", str(scen), "--out-dir", str(out)],
                   check=True, capture_output=True, text=True, timeout=600)
    return out


def scenario_toml(name: str, *, topology: str = 'kind = "cross"\nn_sensors = 12',
                  traffic: str = "", sweep: str) -> str:
    traffic_table = f"[traffic]\n{traffic}\n" if traffic else ""
    return f"""
name = "{name}"
sim_time_s = 600.0
batches = 2
seed = 5

[topology]
{topology}

{traffic_table}[sweep]
{sweep}
"""
