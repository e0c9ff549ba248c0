"""Whole-network assembly: topology, traffic, cells, routing and collectors.

One :class:`NetworkRun` is a single independent replication. It owns the
event loop, instantiates one duty-cycle cell per full-function device,
feeds each sensor's renewal process into its cell and funnels every
delivery up the routing tree until the gateway learns it.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from .engine import RngHub, SimulationError, Simulator
from .mac import (CONTENTION, EVENT_APPEND, PERIODIC_REPLACE, SCHEDULE,
                  CellContext, ContentionCell, DutyCycleConfig, Packet,
                  ScheduleCell, duty_cycle_length)
from .metrics import (DelayCollector, DelaySample, EnergyReport,
                      analytic_delay_contention, analytic_delay_periodic,
                      analytic_delay_schedule, delay_from_cycle_probabilities,
                      energy_report, estimate_cycle_probabilities)
from .radio import EnergyLedger, FrameRegistry, RadioParams
from .topology import (Topology, attach_sensors, build_cross_topology,
                       build_parking_map, compute_gradients, load_map_file,
                       route_next_hop)
from .traffic import ParkingProcess, WeibullParams, periodic_next_emit

CROSS = "cross"
PARKING_MAP = "parking-map"
MAP_FILE = "file"

ROUTE_REFRESH_S = 600.0   # static topologies never change; refresh verifies that


@dataclass(frozen=True)
class TrafficConfig:
    """Per-sensor occupancy process and reporting discipline."""

    mode: str = EVENT_APPEND            # "event" or "periodic"
    mean_occupied_s: float = 2400.0
    mean_vacant_s: float = 2400.0
    shape_occupied: float = 0.5
    shape_vacant: float = 0.5
    report_interval_s: float = 60.0     # periodic mode only
    equilibrium: bool = True            # stationary first period

    def __post_init__(self):
        if self.mode not in (EVENT_APPEND, PERIODIC_REPLACE):
            raise SimulationError(f"unknown traffic mode {self.mode!r}")
        if min(self.mean_occupied_s, self.mean_vacant_s) <= 0:
            raise SimulationError("mean durations must be positive")
        if self.report_interval_s <= 0:
            raise SimulationError("report interval must be positive")

    @property
    def occupied(self) -> WeibullParams:
        return WeibullParams.from_mean(self.mean_occupied_s, self.shape_occupied)

    @property
    def vacant(self) -> WeibullParams:
        return WeibullParams.from_mean(self.mean_vacant_s, self.shape_vacant)


@dataclass(frozen=True)
class RunSpec:
    """Everything one replication needs; picklable for worker pools."""

    mac: DutyCycleConfig = field(default_factory=DutyCycleConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    topology: str = CROSS               # "cross", "parking-map" or "file"
    n_sensors: int = 24                 # cross topology only
    sensor_tpo_dbm: float = 3.0
    map_path: str | None = None
    radio: RadioParams = field(default_factory=RadioParams)
    sim_time_s: float = 86400.0
    seed: int = 1
    strict_delay: bool = False


def build_topology(spec: RunSpec) -> Topology:
    if spec.topology == CROSS:
        return build_cross_topology(spec.n_sensors, spec.sensor_tpo_dbm)
    if spec.topology == PARKING_MAP:
        return build_parking_map(spec.sensor_tpo_dbm)
    if spec.topology == MAP_FILE:
        if not spec.map_path:
            raise SimulationError("topology 'file' requires map_path")
        return build_parking_map(spec.sensor_tpo_dbm,
                                 source=load_map_file(spec.map_path))
    raise SimulationError(f"unknown topology kind {spec.topology!r}")


@dataclass
class RunResult:
    spec: RunSpec
    batch: int
    t_dc_s: float                  # per-cell cycle length, nan when cells differ
    generated: int
    delivered: int
    dropped_retries: int
    dropped_overflow: int
    dropped_replaced: int
    missed: int
    censored: int
    still_queued: int
    attempts: int
    slots_contended: int
    data_collisions: int
    pdr: float
    p1: float
    p2: float
    first_cycle_fraction: float
    mean_delay_s: float
    eq3_delay_s: float             # closed-form delay fed with measured p_k
    analytic_delay_s: float        # closed-form delay fed with measured p1/p2
    cycle_counts: dict[int, int]
    delay_samples: list[DelaySample]
    energy: EnergyReport
    gateway_j: float
    node_energy: dict[int, dict]
    router_load: dict[int, int]

    @property
    def dropped(self) -> int:
        return self.dropped_retries + self.dropped_overflow + self.dropped_replaced

    def metrics(self) -> dict[str, float]:
        """Flat scalar view for cross-batch statistics."""
        loads = list(self.router_load.values())
        return {
            "generated": float(self.generated),
            "delivered": float(self.delivered),
            "dropped": float(self.dropped),
            "censored": float(self.censored),
            "attempts": float(self.attempts),
            "data_collisions": float(self.data_collisions),
            "pdr": self.pdr,
            "p1": self.p1,
            "p2": self.p2,
            "first_cycle_fraction": self.first_cycle_fraction,
            "mean_delay_s": self.mean_delay_s,
            "eq3_delay_s": self.eq3_delay_s,
            "analytic_delay_s": self.analytic_delay_s,
            "sensor_mean_j": self.energy.sensor_mean_j,
            "sensor_std_j": self.energy.sensor_std_j,
            "sensor_total_j": float(sum(self.energy.sensor_joules.values())),
            "gateway_j": self.gateway_j,
            "router_load_max": float(max(loads)) if loads else 0.0,
            "router_load_mean": float(np.mean(loads)) if loads else 0.0,
        }


class _BackboneLedger:
    """Single-radio view of a child router transmitting to its parent.

    A repeater keeps its one radio listening for its own cell, so seconds
    spent on the uplink are seconds not spent listening: they accrue on
    the real ledger and are credited against the own cell's bulk listening.
    Wake and sleep are no-ops because the radio never actually left the
    active region. Exact when the cell listens for its whole cycle (the
    inactive period is zero); with a nonzero inactive period the credit
    is an approximation and the listening accrual clips at zero.
    """

    def __init__(self, real: EnergyLedger, own_cell):
        self._real = real
        self._own_cell = own_cell

    def accrue(self, state: str, seconds: float) -> None:
        self._real.accrue(state, seconds)
        if state != "off":
            self._own_cell.note_attended(seconds)

    def wake(self) -> None:
        pass

    def sleep(self) -> None:
        pass

    def switch(self, from_state: str, to_state: str) -> None:
        pass


class _CellSink:
    """Adapter handing one cell's MAC outcomes to the network layer."""

    def __init__(self, net: "NetworkRun", coordinator: int):
        self.net = net
        self.coordinator = coordinator

    def data_received(self, member: int, packet: Packet, t: float) -> None:
        self.net.data_received(self.coordinator, packet, t)

    def packet_acked(self, member: int, packet: Packet) -> None:
        pass  # per-hop success; cells keep their own tallies

    def packet_dropped(self, member: int, packet: Packet, reason: str) -> None:
        self.net.packet_dropped(packet, reason)


class NetworkRun:
    """One wired replication of a scenario."""

    def __init__(self, spec: RunSpec, batch: int = 0):
        self.spec = spec
        self.batch = batch
        self.sim = Simulator()
        self.hub = RngHub(spec.seed, batch)
        self.params = spec.radio
        self.topo = build_topology(spec)
        self.registry = FrameRegistry(
            self.params,
            lambda tx, rx: self.topo.mean_power_dbm(self.params, tx, rx))
        self.ledgers = {n: EnergyLedger(self.params) for n in self.topo.nodes}
        self.collector = DelayCollector(strict=spec.strict_delay)
        self.attachment = attach_sensors(self.topo, self.params)
        self.parent = self._routes()
        self.cells: dict[int, ScheduleCell | ContentionCell] = {}
        self.forwarded = {f: 0 for f in self.topo.ffd_ids
                          if f != self.topo.gateway_id}
        self._relayed: dict[int, set] = {f: set() for f in self.forwarded}
        self.drop_counts = {"retries": 0, "overflow": 0, "replaced": 0}
        self.generated = 0
        self._seq = 0
        self._last_change: dict[int, float] = {}
        self._procs: dict[int, ParkingProcess] = {}
        self._build_cells()
        self._seed_traffic()
        if len(self.topo.ffd_ids) > 1:
            self.sim.schedule(ROUTE_REFRESH_S, "route-refresh", self._route_refresh)

    # -- construction -------------------------------------------------

    def _routes(self) -> dict[int, int | None]:
        gradients = compute_gradients(self.topo, self.params)
        return {f: route_next_hop(self.topo, self.params, gradients, f)
                for f in self.topo.ffd_ids}

    def _build_cells(self) -> None:
        spec = self.spec
        members_of: dict[int, list[int]] = {f: [] for f in self.topo.ffd_ids}
        for sensor, ffd in self.attachment.items():
            members_of[ffd].append(sensor)
        multi = len(self.topo.ffd_ids) > 1
        cls = ScheduleCell if spec.mac.mode == SCHEDULE else ContentionCell
        for ffd in self.topo.ffd_ids:
            ctx = CellContext(sim=self.sim, hub=self.hub, params=self.params,
                              topology=self.topo, registry=self.registry,
                              ledgers=dict(self.ledgers), sink=_CellSink(self, ffd))
            phase = 0.0
            if multi and ffd != self.topo.gateway_id:
                t_dc = duty_cycle_length(spec.mac, len(members_of[ffd]))
                phase = self.hub.stream(ffd, "phase").uniform() * t_dc
            self.cells[ffd] = cls(ctx, spec.mac, ffd, members_of[ffd], phase)
        # a child router shows up in its parent's cell on the same radio it
        # coordinates its own cell with
        for ffd, up in self.parent.items():
            if up is None:
                continue
            self.cells[up].ctx.ledgers[ffd] = _BackboneLedger(
                self.ledgers[ffd], self.cells[ffd])
            if spec.mac.mode == SCHEDULE:
                self.cells[up].attach_backbone_child(ffd)

    def _seed_traffic(self) -> None:
        cfg = self.spec.traffic
        for sensor in self.topo.sensor_ids:
            proc = ParkingProcess(
                cfg.occupied, cfg.vacant,
                stream=self.hub.stream(sensor, "traffic"),
                init_stream=self.hub.stream(sensor, "init"),
                equilibrium=cfg.equilibrium)
            self._procs[sensor] = proc
            self._last_change[sensor] = 0.0
            self.sim.schedule(proc.next_change, "toggle",
                              partial(self._toggle, sensor))
            if cfg.mode == PERIODIC_REPLACE:
                offset = self.hub.stream(sensor, "init").uniform() * cfg.report_interval_s
                first = periodic_next_emit(0.0, offset, cfg.report_interval_s)
                self.sim.schedule(first, "report", partial(self._report, sensor))

    # -- traffic ------------------------------------------------------

    def _toggle(self, sensor: int) -> None:
        now = self.sim.now
        proc = self._procs[sensor]
        t_next = proc.toggle()
        self._last_change[sensor] = now
        self.collector.record_change(sensor, now)
        if self.spec.traffic.mode == EVENT_APPEND:
            self._emit(sensor, proc.is_occupied, changed_at=now, policy=EVENT_APPEND)
        if t_next <= self.spec.sim_time_s:
            self.sim.schedule(t_next, "toggle", partial(self._toggle, sensor))

    def _report(self, sensor: int) -> None:
        now = self.sim.now
        self._emit(sensor, self._procs[sensor].is_occupied,
                   changed_at=self._last_change[sensor], policy=PERIODIC_REPLACE)
        nxt = now + self.spec.traffic.report_interval_s
        if nxt <= self.spec.sim_time_s:
            self.sim.schedule(nxt, "report", partial(self._report, sensor))

    def _emit(self, sensor: int, status: bool, changed_at: float, policy: str) -> None:
        pkt = Packet(source=sensor, seq=self._seq, status=status,
                     status_changed_at=changed_at, created_at=self.sim.now,
                     size_bytes=self.params.payload_bytes)
        self._seq += 1
        self.generated += 1
        self.cells[self.attachment[sensor]].enqueue(sensor, pkt, policy)

    # -- network layer ------------------------------------------------

    def data_received(self, at_ffd: int, packet: Packet, t: float) -> None:
        if at_ffd == self.topo.gateway_id:
            self.collector.record_gateway_data(packet, t)
            return
        seen = self._relayed[at_ffd]
        key = (packet.source, packet.seq)
        if key in seen:
            return
        seen.add(key)
        self.forwarded[at_ffd] += 1
        up = self.parent[at_ffd]
        if up is None:
            raise SimulationError(f"repeater {at_ffd} has no upstream route")
        # fresh retry budget per hop; opportunity stamps survive end to end
        relay = replace(packet, retries_used=0, hop_count=packet.hop_count + 1)
        self.cells[up].enqueue(at_ffd, relay, EVENT_APPEND)

    def packet_dropped(self, packet: Packet, reason: str) -> None:
        self.drop_counts[reason] += 1
        self.collector.record_drop(packet)

    def _route_refresh(self) -> None:
        if self._routes() != self.parent:
            raise SimulationError("routes changed under a static topology")
        nxt = self.sim.now + ROUTE_REFRESH_S
        if nxt <= self.spec.sim_time_s:
            self.sim.schedule(nxt, "route-refresh", self._route_refresh)

    # -- execution ----------------------------------------------------

    def execute(self) -> RunResult:
        t_end = self.spec.sim_time_s
        self.sim.run_until(t_end)
        for cell in self.cells.values():
            cell.finalize(t_end)
        for ledger in self.ledgers.values():
            ledger.finalize(t_end)
        self.collector.finalize(t_end)
        return self._result()

    def _result(self) -> RunResult:
        spec, col = self.spec, self.collector
        t_dcs = {round(c.t_dc, 12) for c in self.cells.values()}
        t_dc = t_dcs.pop() if len(t_dcs) == 1 else math.nan

        p1 = p2 = eq3 = analytic = math.nan
        if self.generated > 0:
            probs = estimate_cycle_probabilities(col.cycle_counts, self.generated)
            p1 = probs[0] if probs else 0.0
            p2 = probs[1] if len(probs) > 1 else math.nan
            if probs and not math.isnan(t_dc):
                eq3 = delay_from_cycle_probabilities(probs, t_dc)
                if spec.traffic.mode == PERIODIC_REPLACE:
                    p2_eff = p2 if spec.mac.mode == CONTENTION else p1
                    analytic = analytic_delay_periodic(
                        spec.traffic.report_interval_s, p1, p2_eff, t_dc)
                elif spec.mac.mode == SCHEDULE:
                    analytic = analytic_delay_schedule(p1, t_dc)
                else:
                    analytic = analytic_delay_contention(p1, p2, t_dc)

        report = energy_report(self.ledgers, self.topo.sensor_ids)
        node_energy = {}
        for nid in sorted(self.topo.nodes):
            led = self.ledgers[nid]
            node = self.topo.nodes[nid]
            node_energy[nid] = {
                "role": node.role, "x_m": node.x, "y_m": node.y,
                "joules": led.joules,
                "tx_s": led.seconds["tx"], "rx_s": led.seconds["rx"],
                "cs_s": led.seconds["cs"], "off_s": led.seconds["off"],
                "switches": led.switches,
            }

        still = sum(len(q) for c in self.cells.values() for q in c.queues.values())
        censored = sum(1 for s in col.samples if s.censored)
        first = col.cycle_counts.get(1, 0)
        return RunResult(
            spec=spec, batch=self.batch, t_dc_s=t_dc,
            generated=self.generated, delivered=col.delivered,
            dropped_retries=self.drop_counts["retries"],
            dropped_overflow=self.drop_counts["overflow"],
            dropped_replaced=self.drop_counts["replaced"],
            missed=col.missed, censored=censored, still_queued=still,
            attempts=sum(c.attempts for c in self.cells.values()),
            slots_contended=sum(getattr(c, "slots_contended", 0)
                                for c in self.cells.values()),
            data_collisions=self.registry.data_collisions,
            pdr=col.delivered / self.generated if self.generated else math.nan,
            p1=p1, p2=p2,
            first_cycle_fraction=first / self.generated if self.generated else math.nan,
            mean_delay_s=col.mean_delay(),
            eq3_delay_s=eq3, analytic_delay_s=analytic,
            cycle_counts=dict(col.cycle_counts),
            delay_samples=col.samples,
            energy=report,
            gateway_j=self.ledgers[self.topo.gateway_id].joules,
            node_energy=node_energy,
            router_load=dict(self.forwarded),
        )


def run_single(spec: RunSpec, batch: int = 0) -> RunResult:
    """Execute one replication; deterministic in (spec, batch)."""
    return NetworkRun(spec, batch).execute()


def run_replications(spec: RunSpec, batches: int = 20,
                     parallel: int = 1) -> list[RunResult]:
    """Independent replications, identical results serial or pooled."""
    if batches < 1:
        raise SimulationError("need at least one batch")
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(partial(run_single, spec), range(batches)))
    return [run_single(spec, b) for b in range(batches)]
