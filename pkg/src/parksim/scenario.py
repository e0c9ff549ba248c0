"""Scenario files: schema, validation, sweep expansion and hashing.

A scenario is a TOML document with four tables and a few scalars::

    name = "delay-vs-load"        # used for labelling outputs
    sim_time_s = 86400.0
    batches = 20
    seed = 1

    [topology]
    kind = "cross"                # cross | parking-map | file
    n_sensors = 24                # cross only
    sensor_tpo_dbm = 3.0
    # map_path = "my_map.toml"    # kind = "file" only

    [mac]                         # any DutyCycleConfig field
    mode = "schedule"
    t_slot_s = 0.1

    [traffic]
    mode = "event"                # event | periodic
    mean_cycle_s = 4800.0         # or mean_occupied_s + mean_vacant_s
    shape_occupied = 0.5
    shape_vacant = 0.5
    report_interval_s = 60.0
    equilibrium = true

    [sweep]                       # optional; cartesian product, file order
    mode = ["schedule", "contention"]
    mean_cycle_s = [4800.0, 320.0]

Every field is optional except ``name``; omitted fields take the defaults
baked into the config dataclasses. Unknown fields are rejected by name so
typos fail before any run starts.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

import tomlkit

from .engine import SimulationError
from .mac import DutyCycleConfig, MacError
from .simulate import CROSS, MAP_FILE, PARKING_MAP, RunSpec, TrafficConfig

_TOPOLOGY_KEYS = ("kind", "n_sensors", "sensor_tpo_dbm", "map_path")
_MAC_KEYS = ("mode", "t_slot_s", "t_inactive_s", "cw_min", "cw_max",
             "micro_slot_s", "max_retries", "queue_capacity")
_TRAFFIC_KEYS = ("mode", "mean_cycle_s", "mean_occupied_s", "mean_vacant_s",
                 "shape_occupied", "shape_vacant", "report_interval_s",
                 "equilibrium")

# sweepable parameter -> (section, field)
SWEEPABLE = {
    "mode": ("mac", "mode"),
    "t_slot_s": ("mac", "t_slot_s"),
    "t_inactive_s": ("mac", "t_inactive_s"),
    "n_sensors": ("topology", "n_sensors"),
    "sensor_tpo_dbm": ("topology", "sensor_tpo_dbm"),
    "mean_cycle_s": ("traffic", "mean_cycle_s"),
    "report_interval_s": ("traffic", "report_interval_s"),
}


class ScenarioError(Exception):
    """A scenario file that cannot be turned into runnable sweep points."""


@dataclass(frozen=True)
class SweepPoint:
    label: str
    overrides: dict
    spec: RunSpec


@dataclass
class Scenario:
    name: str
    sim_time_s: float = 86400.0
    batches: int = 20
    seed: int = 1
    topology: dict = field(default_factory=dict)
    mac: dict = field(default_factory=dict)
    traffic: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise ScenarioError("field 'name' must be a non-empty string")
        if self.sim_time_s <= 0:
            raise ScenarioError("field 'sim_time_s' must be positive")
        if self.batches < 1:
            raise ScenarioError("field 'batches' must be at least 1")
        _reject_unknown("topology", self.topology, _TOPOLOGY_KEYS)
        _reject_unknown("mac", self.mac, _MAC_KEYS)
        _reject_unknown("traffic", self.traffic, _TRAFFIC_KEYS)
        for key, values in self.sweep.items():
            if key not in SWEEPABLE:
                raise ScenarioError(
                    f"field 'sweep.{key}' is not sweepable; "
                    f"choose from {', '.join(SWEEPABLE)}")
            if not isinstance(values, list) or not values:
                raise ScenarioError(f"field 'sweep.{key}' must be a non-empty list")

    # -- expansion ----------------------------------------------------

    def build_spec(self, overrides: dict | None = None) -> RunSpec:
        topo = dict(self.topology)
        mac = dict(self.mac)
        traffic = dict(self.traffic)
        for key, value in (overrides or {}).items():
            section, name = SWEEPABLE[key]
            {"topology": topo, "mac": mac, "traffic": traffic}[section][name] = value
        try:
            mac_cfg = DutyCycleConfig(**mac)
        except (MacError, TypeError) as err:
            raise ScenarioError(f"field 'mac': {err}") from err
        try:
            traffic_cfg = _traffic_config(traffic)
        except (SimulationError, TypeError) as err:
            raise ScenarioError(f"field 'traffic': {err}") from err
        kind = topo.get("kind", CROSS)
        if kind not in (CROSS, PARKING_MAP, MAP_FILE):
            raise ScenarioError(f"field 'topology.kind': unknown kind {kind!r}")
        return RunSpec(
            mac=mac_cfg, traffic=traffic_cfg, topology=kind,
            n_sensors=int(topo.get("n_sensors", 24)),
            sensor_tpo_dbm=float(topo.get("sensor_tpo_dbm", 3.0)),
            map_path=topo.get("map_path"),
            sim_time_s=float(self.sim_time_s), seed=int(self.seed))

    def points(self) -> list[SweepPoint]:
        """Cartesian product of the sweep lists, in file order."""
        if not self.sweep:
            return [SweepPoint("base", {}, self.build_spec())]
        keys = list(self.sweep)
        out = []
        for combo in itertools.product(*(self.sweep[k] for k in keys)):
            overrides = dict(zip(keys, combo))
            label = "-".join(f"{k}={_fmt(v)}" for k, v in overrides.items())
            out.append(SweepPoint(label, overrides, self.build_spec(overrides)))
        return out

    # -- identity -----------------------------------------------------

    def canonical(self) -> dict:
        return {
            "name": self.name, "sim_time_s": float(self.sim_time_s),
            "batches": int(self.batches), "seed": int(self.seed),
            "topology": dict(self.topology), "mac": dict(self.mac),
            "traffic": dict(self.traffic),
            "sweep": {k: list(v) for k, v in self.sweep.items()},
        }

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def _reject_unknown(table: str, given: dict, allowed: tuple) -> None:
    for key in given:
        if key not in allowed:
            raise ScenarioError(f"field '{table}.{key}' is not recognized; "
                                f"allowed: {', '.join(allowed)}")


def _traffic_config(table: dict) -> TrafficConfig:
    table = dict(table)
    cycle = table.pop("mean_cycle_s", None)
    if cycle is not None:
        if "mean_occupied_s" in table or "mean_vacant_s" in table:
            raise SimulationError(
                "give either mean_cycle_s or the explicit occupied/vacant means")
        # one turnover = one occupied plus one vacant period, split evenly
        table["mean_occupied_s"] = cycle / 2.0
        table["mean_vacant_s"] = cycle / 2.0
    return TrafficConfig(**table)


def scenario_from_dict(data: dict, origin: str = "scenario") -> Scenario:
    data = dict(data)
    known = ("name", "sim_time_s", "batches", "seed",
             "topology", "mac", "traffic", "sweep")
    for key in data:
        if key not in known:
            raise ScenarioError(f"field '{key}' is not recognized in {origin}")
    if "name" not in data:
        raise ScenarioError(f"field 'name' is missing in {origin}")
    try:
        return Scenario(
            name=data["name"],
            sim_time_s=float(data.get("sim_time_s", 86400.0)),
            batches=int(data.get("batches", 20)),
            seed=int(data.get("seed", 1)),
            topology=dict(data.get("topology", {})),
            mac=dict(data.get("mac", {})),
            traffic=dict(data.get("traffic", {})),
            sweep=dict(data.get("sweep", {})))
    except (TypeError, ValueError) as err:
        raise ScenarioError(f"{origin}: {err}") from err


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as err:
        raise ScenarioError(f"scenario file not found: {path}") from err
    except tomllib.TOMLDecodeError as err:
        raise ScenarioError(f"{path}: {err}") from err
    return scenario_from_dict(data, origin=str(path))


def scenario_to_toml(scenario: Scenario) -> str:
    doc = tomlkit.document()
    can = scenario.canonical()
    for key in ("name", "sim_time_s", "batches", "seed"):
        doc[key] = can[key]
    for table_name in ("topology", "mac", "traffic", "sweep"):
        table = can[table_name]
        if table:
            doc[table_name] = table
    return tomlkit.dumps(doc)


def validate_scenario(scenario: Scenario) -> list[SweepPoint]:
    """Expand and sanity-build every point before anything runs."""
    from .simulate import build_topology
    from .topology import TopologyError, attach_sensors, compute_gradients

    points = scenario.points()
    for point in points:
        try:
            topo = build_topology(point.spec)
            attach_sensors(topo, point.spec.radio)
            compute_gradients(topo, point.spec.radio)
        except (TopologyError, SimulationError, ValueError) as err:
            raise ScenarioError(f"point '{point.label}': {err}") from err
    return points
