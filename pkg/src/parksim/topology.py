"""Network layouts, street geometry and gradient routing tables."""

from __future__ import annotations

import math

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .radio import RadioParams, path_loss_db

GATEWAY = "gateway"
REPEATER = "repeater"
SENSOR = "sensor"

ATTACH_MARGIN_DB = 10.0
BACKBONE_MARGIN_DB = 6.0
MIN_SENSOR_TPO_DBM = -10.0


class TopologyError(Exception):
    """Raised for layouts that cannot form a connected network."""


@dataclass(frozen=True)
class Node:
    node_id: int
    role: str
    x: float
    y: float
    tpo_dbm: float
    streets: frozenset[int] = field(default_factory=frozenset)


class Topology:
    """Immutable node placement plus street-aware link geometry."""

    def __init__(self, nodes: list[Node], street_adjacency: dict[int, set[int]]) -> None:
        self.nodes = {n.node_id: n for n in nodes}
        self._street_adj = street_adjacency
        self._corner_cache: dict[tuple[int, int], int] = {}
        gws = [n.node_id for n in nodes if n.role == GATEWAY]
        if len(gws) != 1:
            raise TopologyError(f"expected exactly one gateway, found {len(gws)}")
        self.gateway_id = gws[0]

    @property
    def sensor_ids(self) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if n.role == SENSOR)

    @property
    def ffd_ids(self) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if n.role != SENSOR)

    @property
    def repeater_ids(self) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if n.role == REPEATER)

    def distance(self, a: int, b: int) -> float:
        na, nb = self.nodes[a], self.nodes[b]
        return math.hypot(na.x - nb.x, na.y - nb.y)

    def corners(self, a: int, b: int) -> int:
        """Street corners the signal bends around between two nodes."""
        na, nb = self.nodes[a], self.nodes[b]
        if na.streets & nb.streets:
            return 0
        key = (min(a, b), max(a, b))
        cached = self._corner_cache.get(key)
        if cached is not None:
            return cached
        # BFS over the street graph; each street change is one corner.
        best = None
        frontier = {s: 0 for s in na.streets}
        seen = set(na.streets)
        while frontier:
            nxt: dict[int, int] = {}
            for street, turns in frontier.items():
                if street in nb.streets:
                    best = turns
                    break
                for other in self._street_adj.get(street, ()):
                    if other not in seen:
                        seen.add(other)
                        nxt[other] = turns + 1
            if best is not None:
                break
            frontier = nxt
        if best is None:
            best = 99  # disjoint street systems, effectively opaque
        self._corner_cache[key] = best
        return best

    def mean_power_dbm(self, params: RadioParams, tx: int, rx: int) -> float:
        """Received power before fading, using the transmitter's output power."""
        loss = path_loss_db(self.distance(tx, rx), params.wavelength_m,
                            self.corners(tx, rx), params.corner_loss_db)
        return self.nodes[tx].tpo_dbm - loss

    def link_margin_db(self, params: RadioParams, tx: int, rx: int) -> float:
        return self.mean_power_dbm(params, tx, rx) - params.sensitivity_dbm


# Lateral offsets of successive parking lines in a cross cell. Each added
# line sits farther from the street axis than the previous one.
_LINE_OFFSETS = (0.0, 8.0, -16.0, 24.0, -32.0, 40.0, -48.0, 56.0)
_ARM_DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))
_ARM_POSITIONS = (10.0, 15.0, 20.0)


def build_cross_topology(n_sensors: int, sensor_tpo_dbm: float = 3.0) -> Topology:
    """Single crossroad cell: a central gateway and parking lines on 4 arms.

    Sensors come in lines of 3 per arm with 5 m pitch starting 10 m from
    the gateway. Density grows by adding lines, so the node ids of a small
    cell are a prefix of every larger cell's ids.
    """
    lines, rem = divmod(n_sensors, 12)
    if rem or not 1 <= lines <= len(_LINE_OFFSETS):
        raise ValueError(f"cell size must be a multiple of 12 up to 96, got {n_sensors}")
    nodes = [Node(0, GATEWAY, 0.0, 0.0, 3.0, frozenset({0, 1}))]
    next_id = 1
    for line in range(lines):
        off = _LINE_OFFSETS[line]
        for arm, (dx, dy) in enumerate(_ARM_DIRECTIONS):
            street = 0 if dx else 1
            for along in _ARM_POSITIONS:
                x = dx * along + (-dy) * off
                y = dy * along + dx * off
                nodes.append(Node(next_id, SENSOR, x, y, sensor_tpo_dbm, frozenset({street})))
                next_id += 1
    return Topology(nodes, {0: {1}, 1: {0}})


def _map_source() -> dict:
    ref = resources.files("parksim.data").joinpath("parking_map.toml")
    return tomllib.loads(ref.read_text())


def load_map_file(path: str | Path) -> dict:
    return tomllib.loads(Path(path).read_text())


def build_parking_map(sensor_tpo_dbm: float, source: dict | None = None) -> Topology:
    """City-block map with repeater tiers sized to the sensor output power.

    Repeaters at intersections are always present. Mid-section and then
    quarter-section candidates are enabled tier by tier until every sensor
    closes a link to some full-function device with the attach margin.
    Lowering the sensor power therefore never removes a repeater.
    """
    if sensor_tpo_dbm < MIN_SENSOR_TPO_DBM:
        raise TopologyError(
            f"sensor output power {sensor_tpo_dbm} dBm is below the "
            f"{MIN_SENSOR_TPO_DBM} dBm minimum; sensors cannot reach any repeater tier")
    src = source if source is not None else _map_source()
    params = RadioParams()
    streets = {s["id"]: s for s in src["streets"]}
    adjacency: dict[int, set[int]] = {sid: set() for sid in streets}
    for a in streets.values():
        for b in streets.values():
            if a["id"] != b["id"] and _segments_touch(a, b):
                adjacency[a["id"]].add(b["id"])

    gw = src["gateway"]
    nodes = [Node(0, GATEWAY, gw["x"], gw["y"], 3.0, frozenset(gw["streets"]))]

    sensors: list[Node] = []
    next_id = 1
    for sec in sorted(src["sections"], key=lambda s: s["id"]):
        sx, sy = streets[sec["street"]]["start"]
        ex, ey = streets[sec["street"]]["end"]
        ux, uy = _unit(sx, sy, ex, ey)
        lat = sec.get("lateral_offset", 2.0)
        rows = sec.get("rows", 1)
        for i in range(sec["sensor_count"]):
            along = sec["first_offset"] + (i // rows) * sec["pitch"]
            off = lat if i % rows == 0 else -lat
            x = sx + ux * along + (-uy) * off
            y = sy + uy * along + ux * off
            sensors.append(Node(next_id, SENSOR, x, y, sensor_tpo_dbm,
                                frozenset({sec["street"]})))
            next_id += 1

    candidates = sorted(src["repeaters"], key=lambda r: (r["tier"], r["id"]))
    tiers = sorted({r["tier"] for r in candidates})
    active: list[Node] = []
    enabled_tiers: list[int] = []
    for tier in tiers:
        enabled_tiers.append(tier)
        active = [
            Node(200 + r["id"], REPEATER, r["x"], r["y"], 3.0, frozenset(r["streets"]))
            for r in candidates if r["tier"] in enabled_tiers
        ]
        topo = Topology(nodes + sensors + active, adjacency)
        unreachable = _unattachable_sensors(topo, params)
        if not unreachable:
            return topo
    raise TopologyError(
        f"sensors {unreachable} cannot attach to any repeater at "
        f"{sensor_tpo_dbm} dBm even with every repeater tier enabled")


def _segments_touch(a: dict, b: dict) -> bool:
    ax1, ay1 = a["start"]
    ax2, ay2 = a["end"]
    bx1, by1 = b["start"]
    bx2, by2 = b["end"]
    for px, py in ((bx1, by1), (bx2, by2)):
        if min(ax1, ax2) <= px <= max(ax1, ax2) and min(ay1, ay2) <= py <= max(ay1, ay2):
            if _on_segment(a, px, py):
                return True
    # axis-aligned crossing
    if ax1 == ax2 and by1 == by2:
        return (min(bx1, bx2) <= ax1 <= max(bx1, bx2)
                and min(ay1, ay2) <= by1 <= max(ay1, ay2))
    if ay1 == ay2 and bx1 == bx2:
        return (min(ax1, ax2) <= bx1 <= max(ax1, ax2)
                and min(by1, by2) <= ay1 <= max(by1, by2))
    return False


def _on_segment(seg: dict, px: float, py: float) -> bool:
    (x1, y1), (x2, y2) = seg["start"], seg["end"]
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    if abs(cross) > 1e-9:
        return False
    return min(x1, x2) <= px <= max(x1, x2) and min(y1, y2) <= py <= max(y1, y2)


def _unit(x1: float, y1: float, x2: float, y2: float) -> tuple[float, float]:
    d = math.hypot(x2 - x1, y2 - y1)
    return (x2 - x1) / d, (y2 - y1) / d


def _unattachable_sensors(topo: Topology, params: RadioParams) -> list[int]:
    bad = []
    for sid in topo.sensor_ids:
        margins = [topo.link_margin_db(params, sid, f) for f in topo.ffd_ids]
        if max(margins) < ATTACH_MARGIN_DB:
            bad.append(sid)
    return bad


def attach_sensors(topo: Topology, params: RadioParams) -> dict[int, int]:
    """Bind every sensor to the full-function device with the strongest link."""
    attach: dict[int, int] = {}
    unreachable: list[int] = []
    for sid in topo.sensor_ids:
        best = None
        for fid in topo.ffd_ids:
            m = topo.link_margin_db(params, sid, fid)
            if m >= ATTACH_MARGIN_DB and (best is None or m > best[0]):
                best = (m, fid)
        if best is None:
            unreachable.append(sid)
        else:
            attach[sid] = best[1]
    if unreachable:
        raise TopologyError(f"sensors without an attachable device: {unreachable}")
    return attach


def compute_gradients(topo: Topology, params: RadioParams) -> dict[int, int]:
    """Hop count of every full-function device toward the gateway.

    Links count as usable when the mean budget closes with the backbone
    margin. Sensors never appear; they do not forward.
    """
    grads = {topo.gateway_id: 0}
    frontier = [topo.gateway_id]
    while frontier:
        nxt = []
        for fid in frontier:
            for other in topo.ffd_ids:
                if other in grads:
                    continue
                if topo.link_margin_db(params, other, fid) >= BACKBONE_MARGIN_DB:
                    grads[other] = grads[fid] + 1
                    nxt.append(other)
        frontier = sorted(nxt)
    missing = [f for f in topo.ffd_ids if f not in grads]
    if missing:
        raise TopologyError(f"full-function devices unreachable from gateway: {missing}")
    return grads


def route_next_hop(topo: Topology, params: RadioParams,
                   gradients: dict[int, int], ffd_id: int) -> int | None:
    """Parent of a device on the gradient tree, or None at the gateway.

    Among neighbors one hop closer to the gateway the strongest mean link
    wins; remaining ties go to the lowest node id, keeping routes stable.
    """
    g = gradients[ffd_id]
    if g == 0:
        return None
    best: tuple[float, int] | None = None
    for other in topo.ffd_ids:
        if gradients.get(other) != g - 1:
            continue
        m = topo.link_margin_db(params, ffd_id, other)
        if m < BACKBONE_MARGIN_DB:
            continue
        if best is None or m > best[0] + 1e-12 or (abs(m - best[0]) <= 1e-12 and other < best[1]):
            best = (m, other)
    if best is None:
        raise TopologyError(f"node {ffd_id} has gradient {g} but no usable parent")
    return best[1]
