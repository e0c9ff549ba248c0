"""Shipped catalog of reproducible experiment recipes.

Each figure id maps to a complete scenario whose results feed one chart
family. ``reproduce`` emits the scenario file; running it produces the
CSV layout the plotting frontend consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scenario import Scenario, scenario_from_dict

_MODES = ["schedule", "contention"]


@dataclass(frozen=True)
class Figure:
    figure_id: str
    description: str
    scenario: dict


_CATALOG = (
    Figure(
        "energy-vs-N",
        "per-node energy against network size, both methods, event traffic",
        {
            "name": "energy-vs-N",
            "topology": {"kind": "cross", "sensor_tpo_dbm": 3.0},
            "mac": {"t_slot_s": 0.1},
            "traffic": {"mode": "event", "mean_cycle_s": 1200.0},
            "sweep": {"mode": _MODES, "n_sensors": [12, 24, 48, 96]},
        }),
    Figure(
        "delay-vs-N",
        "information delay against network size, both methods, event traffic",
        {
            "name": "delay-vs-N",
            "topology": {"kind": "cross", "sensor_tpo_dbm": 3.0},
            "mac": {"t_slot_s": 0.1},
            "traffic": {"mode": "event", "mean_cycle_s": 1200.0},
            "sweep": {"mode": _MODES, "n_sensors": [12, 24, 48, 96]},
        }),
    Figure(
        "energy-vs-omega",
        "per-node energy against the periodic report interval",
        {
            "name": "energy-vs-omega",
            "topology": {"kind": "cross", "n_sensors": 24},
            "mac": {"t_slot_s": 0.1, "t_inactive_s": 0.6},
            "traffic": {"mode": "periodic", "mean_cycle_s": 4800.0},
            "sweep": {"mode": _MODES,
                      "report_interval_s": [60.0, 120.0, 600.0, 1200.0]},
        }),
    Figure(
        "delay-vs-load",
        "delay and delivery probabilities against traffic intensity",
        {
            "name": "delay-vs-load",
            "topology": {"kind": "cross", "n_sensors": 24},
            "mac": {"t_slot_s": 0.1},
            "traffic": {"mode": "event"},
            "sweep": {"mode": _MODES,
                      "mean_cycle_s": [4800.0, 2400.0, 1200.0, 640.0, 320.0]},
        }),
    Figure(
        "energy-delay-tradeoff",
        "energy against delay across slot durations at heavy event traffic",
        {
            "name": "energy-delay-tradeoff",
            "topology": {"kind": "cross", "n_sensors": 24},
            "mac": {"t_slot_s": 0.1},
            "traffic": {"mode": "event", "mean_cycle_s": 160.0},
            "sweep": {"mode": _MODES,
                      "t_slot_s": [0.1, 0.2, 0.4, 0.6, 0.9, 1.2]},
        }),
    Figure(
        "parking-map-load",
        "router load across the parking map at four transmit powers",
        {
            "name": "parking-map-load",
            "topology": {"kind": "parking-map"},
            "mac": {"t_slot_s": 0.1},
            "traffic": {"mode": "event", "mean_cycle_s": 1600.0},
            "sweep": {"mode": _MODES,
                      "sensor_tpo_dbm": [3.0, 0.0, -3.0, -7.0]},
        }),
)

FIGURES = {fig.figure_id: fig for fig in _CATALOG}

# accepted spellings that map onto catalog ids
_ALIASES = {fid.lower(): fid for fid in FIGURES}
_ALIASES["energy-vs-ω"] = "energy-vs-omega"


def resolve_figure_id(figure_id: str) -> str | None:
    if figure_id in FIGURES:
        return figure_id
    return _ALIASES.get(figure_id.lower())


def figure_scenario(figure_id: str) -> Scenario:
    resolved = resolve_figure_id(figure_id)
    if resolved is None:
        raise KeyError(figure_id)
    return scenario_from_dict(FIGURES[resolved].scenario, origin=resolved)
