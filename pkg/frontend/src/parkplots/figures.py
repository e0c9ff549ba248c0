"""Figure catalog and series extraction.

Each figure id maps aggregate columns onto x/y/error-bar series, one
series per MAC mode (or per power level for the router-load profile).
Series tables are plain DataFrames with columns series/x/y/yerr (plus
xerr for the tradeoff scatter) so correctness is testable without
touching the rendered image.
"""

from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:                       # 3.10
    import tomli as tomllib

import pandas as pd

from .schema import METADATA, SchemaError, load_aggregate, load_routerload


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    description: str
    x: str
    y: str
    yerr: str
    xerr: str | None = None
    kind: str = "line"          # line | scatter | profile
    x_label: str = ""
    y_label: str = ""


FIGURES = {
    "energy-vs-N": FigureSpec(
        "energy-vs-N", "per-sensor daily energy vs cell size",
        x="n_sensors", y="sensor_mean_j_mean", yerr="sensor_std_j_mean",
        x_label="sensors per cell", y_label="energy per sensor [J/day]"),
    "delay-vs-N": FigureSpec(
        "delay-vs-N", "mean information delay vs cell size",
        x="n_sensors", y="mean_delay_s_mean", yerr="mean_delay_s_std",
        x_label="sensors per cell", y_label="mean delay [s]"),
    "energy-vs-omega": FigureSpec(
        "energy-vs-omega", "per-sensor energy vs report interval",
        x="report_interval_s", y="sensor_mean_j_mean", yerr="sensor_std_j_mean",
        x_label="report interval [s]", y_label="energy per sensor [J/day]"),
    "delay-vs-load": FigureSpec(
        "delay-vs-load", "mean information delay vs parking turnover",
        x="mean_cycle_s", y="mean_delay_s_mean", yerr="mean_delay_s_std",
        x_label="mean occupancy cycle [s]", y_label="mean delay [s]"),
    "energy-delay-tradeoff": FigureSpec(
        "energy-delay-tradeoff", "energy against delay across slot sizes",
        x="mean_delay_s_mean", y="sensor_mean_j_mean",
        yerr="sensor_std_j_mean", xerr="mean_delay_s_std", kind="scatter",
        x_label="mean delay [s]", y_label="energy per sensor [J/day]"),
    "parking-map-load": FigureSpec(
        "parking-map-load", "ranked repeater forwarding load on the map",
        x="rank", y="handled_mean", yerr="handled_std", kind="profile",
        x_label="repeater rank", y_label="packets handled per batch"),
}


def _mode_column(frame: pd.DataFrame, results_dir: Path) -> pd.Series:
    """Sweep column when present, else the single configured mode."""
    if "mode" in frame.columns:
        return frame["mode"]
    meta = Path(results_dir) / METADATA
    mode = "schedule"
    if meta.is_file():
        scenario = tomllib.loads(meta.read_text()).get("scenario", {})
        mode = scenario.get("mac", {}).get("mode", mode)
    return pd.Series([mode] * len(frame), index=frame.index)


def _aggregate_series(results_dir: Path, spec: FigureSpec) -> pd.DataFrame:
    required = tuple(c for c in (spec.x, spec.y, spec.yerr, spec.xerr) if c)
    frame = load_aggregate(results_dir, required)
    out = pd.DataFrame({
        "series": _mode_column(frame, results_dir),
        "x": frame[spec.x].astype(float),
        "y": frame[spec.y].astype(float),
        "yerr": frame[spec.yerr].astype(float),
    })
    if spec.xerr:
        out["xerr"] = frame[spec.xerr].astype(float)
    return out.sort_values(["series", "x"], kind="stable").reset_index(drop=True)


def _routerload_series(results_dir: Path) -> pd.DataFrame:
    """One load profile per power level, schedule rows when both modes ran."""
    agg = load_aggregate(results_dir, ())
    if "mode" in agg.columns and (agg["mode"] == "schedule").any():
        agg = agg[agg["mode"] == "schedule"]
    if "sensor_tpo_dbm" in agg.columns:
        labels = {row["point"]: f"tpo={row['sensor_tpo_dbm']:g}"
                  for _, row in agg.iterrows()}
    else:
        labels = {row["point"]: str(row["point"]) for _, row in agg.iterrows()}

    chunks = []
    for label, series_name in labels.items():
        table = load_routerload(results_dir, str(label))
        routers = table[table["role"] == "repeater"]
        if routers.empty:
            raise SchemaError(f"point '{label}' has no repeater rows")
        per_node = routers.groupby("node_id")["handled"]
        stats = pd.DataFrame({
            "y": per_node.mean(),
            "yerr": per_node.std(ddof=1).fillna(0.0),
        }).sort_values("y", ascending=False).reset_index(drop=True)
        stats.insert(0, "series", series_name)
        stats.insert(1, "x", (stats.index + 1).astype(float))
        chunks.append(stats)
    out = pd.concat(chunks, ignore_index=True)
    return out.sort_values(["series", "x"], kind="stable").reset_index(drop=True)


def build_series(results_dir, figure_id: str) -> pd.DataFrame:
    if figure_id not in FIGURES:
        known = ", ".join(sorted(FIGURES))
        raise SchemaError(f"unknown figure id '{figure_id}'; known: {known}")
    spec = FIGURES[figure_id]
    if spec.kind == "profile":
        return _routerload_series(Path(results_dir))
    return _aggregate_series(Path(results_dir), spec)
