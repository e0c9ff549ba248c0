"""Layout builders, attachment rules and gradient routing."""

import math

import pytest

from parksim.radio import RadioParams
from parksim.topology import (
    ATTACH_MARGIN_DB,
    BACKBONE_MARGIN_DB,
    Topology,
    TopologyError,
    attach_sensors,
    build_cross_topology,
    build_parking_map,
    compute_gradients,
    route_next_hop,
)

PARAMS = RadioParams()


# ---------------------------------------------------------------- cross cell


def test_cross_cell_counts_and_geometry():
    topo = build_cross_topology(12)
    assert len(topo.nodes) == 13
    assert topo.sensor_ids == list(range(1, 13))
    assert topo.gateway_id == 0
    assert topo.repeater_ids == []
    # first line: 3 sensors per arm, 5 m pitch, starting 10 m out
    assert topo.distance(0, 1) == pytest.approx(10.0)
    assert topo.distance(1, 2) == pytest.approx(5.0)
    assert topo.distance(2, 3) == pytest.approx(5.0)


def test_cross_cell_ids_are_prefix_stable_across_sizes():
    small = build_cross_topology(12)
    big = build_cross_topology(96)
    for sid in small.sensor_ids:
        assert (big.nodes[sid].x, big.nodes[sid].y) == (small.nodes[sid].x, small.nodes[sid].y)
    assert big.sensor_ids == list(range(1, 97))


def test_cross_cell_rejects_unsupported_sizes():
    for bad in (0, 13, 18, 108):
        with pytest.raises(ValueError):
            build_cross_topology(bad)


def test_cross_cell_all_sensors_attach_to_gateway_at_default_power():
    topo = build_cross_topology(96)
    attach = attach_sensors(topo, PARAMS)
    assert set(attach) == set(topo.sensor_ids)
    assert set(attach.values()) == {0}
    worst = min(topo.link_margin_db(PARAMS, s, 0) for s in topo.sensor_ids)
    assert worst >= ATTACH_MARGIN_DB


def test_cross_cell_attach_fails_at_very_low_power():
    topo = build_cross_topology(96, sensor_tpo_dbm=-10.0)
    with pytest.raises(TopologyError):
        attach_sensors(topo, PARAMS)


def test_cross_cell_corner_counts():
    topo = build_cross_topology(12)
    assert topo.corners(1, 2) == 0      # same street
    assert topo.corners(1, 7) == 1      # east arm to north arm
    assert topo.corners(0, 7) == 0      # gateway sits on both streets


def test_corner_loss_enters_power_budget():
    topo = build_cross_topology(12)
    same = topo.mean_power_dbm(PARAMS, 1, 4)
    d_17 = topo.distance(1, 7)
    d_14 = topo.distance(1, 4)
    bent = topo.mean_power_dbm(PARAMS, 1, 7)
    # normalize out geometry: the remaining gap is exactly one corner loss
    geometry = 20.0 * math.log10(d_17 / d_14)
    assert (same - bent) == pytest.approx(PARAMS.corner_loss_db + geometry)


# ---------------------------------------------------------------- city map


def test_map_sensor_count_is_power_independent():
    for tpo in (3.0, -7.0):
        topo = build_parking_map(tpo)
        assert len(topo.sensor_ids) == 120


def test_map_repeater_tiers_grow_as_power_drops():
    counts = [len(build_parking_map(t).repeater_ids) for t in (3.0, 0.0, -3.0, -7.0)]
    assert counts == [7, 7, 17, 37]
    assert counts == sorted(counts)


def test_map_rejects_power_below_floor():
    with pytest.raises(TopologyError):
        build_parking_map(-10.5)
    # the floor itself is still buildable
    assert len(build_parking_map(-10.0).repeater_ids) == 37


def test_map_attach_margins_hold_at_lowest_catalog_power():
    topo = build_parking_map(-7.0)
    attach = attach_sensors(topo, PARAMS)
    for sid, fid in attach.items():
        assert topo.link_margin_db(PARAMS, sid, fid) >= ATTACH_MARGIN_DB


def test_map_gradients_form_shallow_tree():
    for tpo in (3.0, -7.0):
        topo = build_parking_map(tpo)
        grads = compute_gradients(topo, PARAMS)
        assert grads[topo.gateway_id] == 0
        assert set(grads) == set(topo.ffd_ids)
        assert max(grads.values()) == 3


def test_routes_step_down_one_gradient_and_terminate():
    topo = build_parking_map(-7.0)
    grads = compute_gradients(topo, PARAMS)
    for fid in topo.ffd_ids:
        hop = route_next_hop(topo, PARAMS, grads, fid)
        if grads[fid] == 0:
            assert hop is None
            continue
        assert grads[hop] == grads[fid] - 1
        assert topo.link_margin_db(PARAMS, fid, hop) >= BACKBONE_MARGIN_DB
        # walking parents reaches the gateway without cycles
        steps, cur = 0, fid
        while cur != topo.gateway_id:
            cur = route_next_hop(topo, PARAMS, grads, cur)
            steps += 1
            assert steps <= len(topo.ffd_ids)


def test_removing_a_repeater_never_shortens_gradients():
    topo = build_parking_map(3.0)
    grads = compute_gradients(topo, PARAMS)
    for victim in topo.repeater_ids:
        pruned = Topology(
            [n for n in topo.nodes.values() if n.node_id != victim],
            topo._street_adj,
        )
        try:
            new = compute_gradients(pruned, PARAMS)
        except TopologyError:
            continue  # disconnecting the backbone is an acceptable outcome
        for fid, g in new.items():
            assert g >= grads[fid]


def test_removing_the_deepest_tier_breaks_low_power_attachment():
    # tier enabled implies some sensor needed it, so stripping the whole
    # tier must leave at least one sensor unattachable
    topo = build_parking_map(-7.0)
    deepest = [n for n in topo.repeater_ids if n >= 220]
    assert deepest
    pruned = Topology(
        [n for n in topo.nodes.values() if n.node_id not in deepest],
        topo._street_adj,
    )
    with pytest.raises(TopologyError):
        attach_sensors(pruned, PARAMS)


def test_duplicate_gateway_rejected():
    topo = build_cross_topology(12)
    nodes = list(topo.nodes.values())
    second_gw = type(nodes[0])(99, "gateway", 1.0, 1.0, 3.0)
    with pytest.raises(TopologyError):
        Topology(nodes + [second_gw], {0: {1}, 1: {0}})
