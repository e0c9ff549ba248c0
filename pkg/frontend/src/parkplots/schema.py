"""Documented layout of a parksim results directory.

This package talks to the simulator only through these files; it never
imports it. A results directory looks like:

    metadata.toml            run identity: name, seed, batches, sweep_keys
    summary.csv              one row per (sweep point, batch), raw metrics
    aggregate.csv            one row per sweep point, <metric>_mean/_std
    points/<label>/delay.csv       per-packet delay samples
    points/<label>/energy.csv      per-node energy split by radio state
    points/<label>/routerload.csv  forwarding counts with node positions

aggregate.csv starts with a "point" label column, then one column per
sweep key (for example "mode", "n_sensors"), then mean/std pairs for
every scalar metric. routerload.csv carries one row per (batch, node)
with the node's role ("gateway" or "repeater"), position in meters and
the number of packets it handled.
"""

from pathlib import Path

import pandas as pd

AGGREGATE = "aggregate.csv"
SUMMARY = "summary.csv"
METADATA = "metadata.toml"
ROUTERLOAD_COLUMNS = ("batch", "node_id", "role", "x_m", "y_m", "handled")


class SchemaError(Exception):
    """A results file is missing or does not match the documented layout."""


def load_table(path: Path, required: tuple[str, ...]) -> pd.DataFrame:
    if not path.is_file():
        raise SchemaError(f"{path} not found; is this a results directory?")
    frame = pd.read_csv(path)
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SchemaError(
            f"{path.name} is missing columns: {', '.join(missing)}")
    return frame


def load_aggregate(results_dir: Path, required: tuple[str, ...]) -> pd.DataFrame:
    return load_table(Path(results_dir) / AGGREGATE, ("point",) + required)


def load_routerload(results_dir: Path, label: str) -> pd.DataFrame:
    path = Path(results_dir) / "points" / label / "routerload.csv"
    return load_table(path, ROUTERLOAD_COLUMNS)
