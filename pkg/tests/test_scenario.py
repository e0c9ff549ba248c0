"""Scenario schema, sweep expansion, hashing and the figure catalog."""

import pytest

from parksim.figures import FIGURES, figure_scenario, resolve_figure_id
from parksim.scenario import (
    Scenario,
    ScenarioError,
    load_scenario,
    scenario_from_dict,
    scenario_to_toml,
    validate_scenario,
)


def _minimal(**kw):
    data = {"name": "probe"}
    data.update(kw)
    return scenario_from_dict(data)


# ---------------------------------------------------------------- schema


def test_defaults_fill_missing_fields():
    sc = _minimal()
    assert sc.batches == 20 and sc.seed == 1 and sc.sim_time_s == 86400.0
    points = sc.points()
    assert len(points) == 1 and points[0].label == "base"
    spec = points[0].spec
    assert spec.mac.t_slot_s == 0.1
    assert spec.n_sensors == 24
    assert spec.topology == "cross"
    assert spec.traffic.mean_occupied_s == 2400.0


def test_name_is_required():
    with pytest.raises(ScenarioError, match="name"):
        scenario_from_dict({"batches": 3})


def test_unknown_fields_are_named_in_errors():
    with pytest.raises(ScenarioError, match="batchs"):
        scenario_from_dict({"name": "x", "batchs": 5})
    with pytest.raises(ScenarioError, match="mac.slot"):
        _minimal(mac={"slot": 0.1})
    with pytest.raises(ScenarioError, match="traffic.cycle"):
        _minimal(traffic={"cycle": 100.0})
    with pytest.raises(ScenarioError, match="topology.size"):
        _minimal(topology={"size": 24})


def test_invalid_section_values_name_their_section():
    with pytest.raises(ScenarioError, match="field 'mac'"):
        _minimal(mac={"t_slot_s": -1.0}).points()
    with pytest.raises(ScenarioError, match="field 'traffic'"):
        _minimal(traffic={"mean_occupied_s": -5.0}).points()
    with pytest.raises(ScenarioError, match="topology.kind"):
        _minimal(topology={"kind": "torus"}).points()


def test_mean_cycle_splits_evenly_and_excludes_explicit_means():
    sc = _minimal(traffic={"mean_cycle_s": 1200.0})
    spec = sc.points()[0].spec
    assert spec.traffic.mean_occupied_s == 600.0
    assert spec.traffic.mean_vacant_s == 600.0
    with pytest.raises(ScenarioError, match="mean_cycle_s"):
        _minimal(traffic={"mean_cycle_s": 1200.0, "mean_vacant_s": 100.0}).points()


def test_sweep_rejects_unknown_and_empty():
    with pytest.raises(ScenarioError, match="sweep.queue_capacity"):
        _minimal(sweep={"queue_capacity": [8, 16]})
    with pytest.raises(ScenarioError, match="non-empty list"):
        _minimal(sweep={"t_slot_s": []})
    with pytest.raises(ScenarioError, match="non-empty list"):
        _minimal(sweep={"t_slot_s": 0.1})


# ---------------------------------------------------------------- sweeps


def test_sweep_expands_cartesian_in_file_order():
    sc = _minimal(sweep={"mode": ["schedule", "contention"],
                         "n_sensors": [12, 24]})
    labels = [p.label for p in sc.points()]
    assert labels == [
        "mode=schedule-n_sensors=12",
        "mode=schedule-n_sensors=24",
        "mode=contention-n_sensors=12",
        "mode=contention-n_sensors=24",
    ]
    specs = [p.spec for p in sc.points()]
    assert specs[0].mac.mode == "schedule" and specs[0].n_sensors == 12
    assert specs[3].mac.mode == "contention" and specs[3].n_sensors == 24


def test_sweep_labels_format_floats_compactly():
    sc = _minimal(sweep={"t_slot_s": [0.1, 1.2]})
    assert [p.label for p in sc.points()] == ["t_slot_s=0.1", "t_slot_s=1.2"]


def test_sweep_overrides_reach_traffic_section():
    sc = _minimal(sweep={"mean_cycle_s": [4800.0, 320.0]})
    means = [p.spec.traffic.mean_occupied_s for p in sc.points()]
    assert means == [2400.0, 160.0]


# ---------------------------------------------------------------- identity


def test_hash_stable_and_sensitive():
    a = _minimal(seed=1)
    b = _minimal(seed=1)
    c = _minimal(seed=2)
    assert a.hash() == b.hash()
    assert a.hash() != c.hash()
    assert len(a.hash()) == 16


def test_toml_round_trip_preserves_semantics(tmp_path):
    sc = _minimal(sim_time_s=3600.0, batches=2,
                  topology={"kind": "cross", "n_sensors": 12},
                  mac={"mode": "contention", "t_inactive_s": 0.9},
                  traffic={"mean_cycle_s": 640.0},
                  sweep={"t_slot_s": [0.1, 0.2]})
    path = tmp_path / "probe.toml"
    path.write_text(scenario_to_toml(sc))
    back = load_scenario(path)
    assert back.canonical() == sc.canonical()
    assert back.hash() == sc.hash()


def test_load_scenario_error_paths(tmp_path):
    with pytest.raises(ScenarioError, match="not found"):
        load_scenario(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("name = [unterminated")
    with pytest.raises(ScenarioError):
        load_scenario(bad)


# ---------------------------------------------------------------- validation


def test_validate_rejects_unbuildable_points():
    sc = _minimal(topology={"kind": "cross", "n_sensors": 24},
                  sweep={"n_sensors": [12, 13]})
    with pytest.raises(ScenarioError, match="n_sensors=13"):
        validate_scenario(sc)


def test_validate_rejects_unreachable_power():
    sc = _minimal(topology={"kind": "parking-map", "sensor_tpo_dbm": -10.5})
    with pytest.raises(ScenarioError, match="point"):
        validate_scenario(sc)


# ---------------------------------------------------------------- catalog


def test_figure_catalog_ids_and_aliases():
    assert len(FIGURES) == 6
    assert resolve_figure_id("ENERGY-VS-N") == "energy-vs-N"
    assert resolve_figure_id("energy-vs-ω") == "energy-vs-omega"
    assert resolve_figure_id("not-a-figure") is None
    with pytest.raises(KeyError):
        figure_scenario("not-a-figure")


def test_every_catalog_figure_validates():
    for fid in FIGURES:
        sc = figure_scenario(fid)
        points = validate_scenario(sc)
        assert points, fid
        assert sc.name == fid
        # catalog scenarios always sweep both access modes
        assert "mode" in sc.sweep
