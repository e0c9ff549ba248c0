"""Schedule-based and contention-based duty-cycled bandwidth allocation.

Both methods repeat the same skeleton: a short active region at the head
of every duty cycle followed by an inactive tail. The schedule method
assigns every attached sensor a private slot per cycle; the contention
method exposes one shared slot that pending senders race for with a
randomized backoff. Nodes with nothing to send keep the radio off.

Attempts run in two stages. The slot-begin event draws fades, books the
transmit-side timeline and registers all frames of the exchange; a
resolve event at the end of the exchange applies interference outcomes.
Every frame is registered at its cell's slot start, so any two
overlapping frames are both known to the registry before either resolve
event fires. Fades gate how far the exchange progresses (a faded beacon
draws no grant); interference losses discovered at resolve time fail the
attempt at the same point but cannot retract a frame already registered.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .engine import RngHub, Simulator
from .radio import (DELIVERED, EnergyLedger, Frame, FrameRegistry, RadioParams,
                    rayleigh_gain_db)
from .topology import Topology

SCHEDULE = "schedule"
CONTENTION = "contention"

EVENT_APPEND = "event"         # every status toggle is reported
PERIODIC_REPLACE = "periodic"  # newest sample replaces any stale report

DROP_RETRIES = "retries"
DROP_OVERFLOW = "overflow"
DROP_REPLACED = "replaced"

_EPS = 1e-9


class MacError(Exception):
    pass


@dataclass(frozen=True)
class DutyCycleConfig:
    mode: str = SCHEDULE
    t_slot_s: float = 0.1
    t_inactive_s: float = 0.0
    cw_min: int = 8        # micro-slots
    cw_max: int = 128
    micro_slot_s: float = 0.00032   # 20 symbols at 62.5 ksym/s
    max_retries: int = 5
    queue_capacity: int = 64

    def __post_init__(self):
        if self.mode not in (SCHEDULE, CONTENTION):
            raise MacError(f"unknown mode {self.mode!r}")
        if self.t_slot_s <= 0 or self.t_inactive_s < 0:
            raise MacError("slot must be positive and inactive period non-negative")
        if not 1 <= self.cw_min <= self.cw_max:
            raise MacError(f"need 1 <= cw_min <= cw_max, got {self.cw_min}, {self.cw_max}")
        if self.micro_slot_s <= 0:
            raise MacError("micro-slot must be positive")
        if self.max_retries < 0 or self.queue_capacity < 1:
            raise MacError("max_retries must be >= 0 and queue_capacity >= 1")
        validate_slot_fit(self, RadioParams())


def validate_slot_fit(config: DutyCycleConfig, params: RadioParams) -> None:
    """The whole in-slot exchange must fit inside one slot."""
    b, d, u = params.beacon_airtime, params.data_airtime, params.turnaround_s
    reserved = 3 * b + 3 * u + d  # beacon, grant, data, piggybacked ack
    if reserved > config.t_slot_s + _EPS:
        raise MacError(f"slot {config.t_slot_s} s too short for the reservation "
                       f"exchange ({reserved:.4f} s)")
    if config.mode == CONTENTION:
        contended = config.cw_max * config.micro_slot_s + 2 * b + 2 * u + d
        if contended > config.t_slot_s + _EPS:
            raise MacError(f"backoff window plus exchange ({contended:.4f} s) "
                           f"exceeds slot {config.t_slot_s} s")


def duty_cycle_length(config: DutyCycleConfig, n_sensors: int) -> float:
    if config.mode == SCHEDULE:
        return config.t_slot_s * (n_sensors + 1) + config.t_inactive_s
    return config.t_slot_s + config.t_inactive_s


def schedule_slot_owner(members: tuple[int, ...], slot_index: int) -> int | None:
    """Owner of a slot; slot 0 belongs to the coordinator (None)."""
    if not 0 <= slot_index <= len(members):
        raise MacError(f"slot index {slot_index} out of range 0..{len(members)}")
    if slot_index == 0:
        return None
    return members[slot_index - 1]


def contention_draw(cw: int, stream) -> int:
    """Uniform backoff in [0, cw) micro-slots."""
    return min(int(stream.uniform() * cw), cw - 1)


def backoff_window_update(cw: int, success: bool, config: DutyCycleConfig) -> int:
    if success:
        return config.cw_min
    return min(2 * cw, config.cw_max)


@dataclass
class Packet:
    source: int
    seq: int
    status: bool
    status_changed_at: float
    created_at: float
    size_bytes: int = 84
    retries_used: int = 0
    hop_count: int = 0
    # stamped by the cell that first queues the packet
    first_opportunity: float | None = None
    origin_t_dc: float | None = None

    def __post_init__(self):
        if self.status_changed_at > self.created_at + _EPS:
            raise MacError("status_changed_at must not exceed created_at")


class TxQueue:
    """Bounded FIFO of unsent reports."""

    def __init__(self, capacity: int = 64):
        self.pending: deque[Packet] = deque()
        self.capacity = capacity
        self.dropped_overflow = 0
        self.replaced_stale = 0

    def __len__(self):
        return len(self.pending)

    @property
    def head(self) -> Packet | None:
        return self.pending[0] if self.pending else None


def enqueue_status_packet(queue: TxQueue, packet: Packet, policy: str) -> list[Packet]:
    """Apply the traffic-mode queue policy; returns displaced packets."""
    displaced: list[Packet] = []
    if policy == PERIODIC_REPLACE:
        while queue.pending:
            displaced.append(queue.pending.popleft())
        queue.replaced_stale += len(displaced)
    elif policy == EVENT_APPEND:
        if len(queue.pending) >= queue.capacity:
            displaced.append(queue.pending.popleft())
            queue.dropped_overflow += 1
    else:
        raise MacError(f"unknown queue policy {policy!r}")
    queue.pending.append(packet)
    return displaced


@dataclass
class CellContext:
    sim: Simulator
    hub: RngHub
    params: RadioParams
    topology: Topology
    registry: FrameRegistry
    ledgers: dict[int, EnergyLedger]
    sink: object  # data_received / packet_acked / packet_dropped


@dataclass
class _Exchange:
    """One attempt in flight between slot-begin and resolve."""
    member: int
    packet: Packet
    slot_begin: float
    frames: dict[str, Frame]
    ack_window: tuple[float, float] | None = None
    ack_fade_db: float = 0.0


def _next_occurrence(t: float, phase: float, period: float, offset: float,
                     stride: int = 1, residue: int = 0) -> float:
    """First time phase + k*period + offset >= t with k % stride == residue."""
    k = max(0, math.ceil((t - phase - offset) / period - 1e-9))
    if stride > 1:
        k += (residue - k) % stride
    when = phase + k * period + offset
    while when < t - 1e-9:
        k += stride
        when = phase + k * period + offset
    return when


class _CellBase:
    def __init__(self, ctx: CellContext, config: DutyCycleConfig,
                 coordinator: int, members: list[int], phase: float = 0.0):
        validate_slot_fit(config, ctx.params)
        self.ctx = ctx
        self.config = config
        self.coordinator = coordinator
        self.members = tuple(sorted(members))
        self.t_dc = duty_cycle_length(config, len(self.members))
        self.phase = phase % self.t_dc
        self.queues: dict[int, TxQueue] = {}
        self.attempts = 0
        self.acked: dict[int, int] = {}
        self.dropped: dict[int, int] = {}
        # rx/tx seconds booked inside attended windows, deducted from the
        # coordinator's bulk listening at finalize
        self._attended_s = 0.0

    def _queue(self, node: int) -> TxQueue:
        q = self.queues.get(node)
        if q is None:
            q = TxQueue(self.config.queue_capacity)
            self.queues[node] = q
        return q

    def _notify_displaced(self, node: int, displaced: list[Packet], policy: str):
        reason = DROP_REPLACED if policy == PERIODIC_REPLACE else DROP_OVERFLOW
        for pkt in displaced:
            self.dropped[node] = self.dropped.get(node, 0) + 1
            self.ctx.sink.packet_dropped(node, pkt, reason)

    def _count_drop(self, node: int, pkt: Packet) -> None:
        self.dropped[node] = self.dropped.get(node, 0) + 1
        self.ctx.sink.packet_dropped(node, pkt, DROP_RETRIES)

    def _count_ack(self, node: int, pkt: Packet) -> None:
        self.acked[node] = self.acked.get(node, 0) + 1
        self.ctx.sink.packet_acked(node, pkt)

    def _fade(self, member: int) -> float:
        return rayleigh_gain_db(self.ctx.hub.stream(member, "fading"))

    def _frame(self, kind: str, tx: int, rx: int, start: float, end: float,
               fade_db: float) -> Frame:
        signal = self.ctx.topology.mean_power_dbm(self.ctx.params, tx, rx) + fade_db
        return self.ctx.registry.add(
            Frame(start=start, end=end, tx_node=tx, rx_node=rx,
                  signal_dbm=signal, kind=kind))

    def _decodes(self, frame: Frame) -> bool:
        """Fade-only decode check; interference is applied at resolve."""
        return frame.signal_dbm >= self.ctx.params.sensitivity_dbm

    def note_attended(self, seconds: float) -> None:
        """Radio time spent inside this cell's listening window that the
        bulk accrual at finalize must not book again."""
        self._attended_s += seconds

    def _coord_accrue(self, state: str, seconds: float):
        self.ctx.ledgers[self.coordinator].accrue(state, seconds)
        self.note_attended(seconds)

    def _listen_window(self) -> tuple[float, float]:
        raise NotImplementedError

    def finalize(self, t_end: float) -> None:
        """Book the coordinator's bulk listening over the whole run."""
        s, e = self._listen_window()
        span = e - s
        if span <= 0:
            return
        led = self.ctx.ledgers[self.coordinator]
        if span >= self.t_dc - 1e-9:
            listened = max(0.0, t_end - self.phase)
            led.switches += 1
        else:
            n_done = max(0, math.floor((t_end - self.phase - e) / self.t_dc) + 1)
            tail = t_end - (self.phase + n_done * self.t_dc + s)
            partial = min(max(tail, 0.0), span)
            listened = n_done * span + partial
            led.switches += 2 * n_done + (1 if partial > 0 else 0)
        led.accrue("cs", max(0.0, listened - self._attended_s))


class ScheduleCell(_CellBase):
    """One coordinator polling preassigned per-sensor slots.

    Slot 0 is the coordinator's own; in a multi-hop deployment child
    routers take turns using it for upstream forwarding, otherwise it
    stays idle. A sensor retries in its own slot of the next cycle, so
    consecutive attempt times differ by exactly one duty cycle.
    """

    def __init__(self, ctx, config, coordinator, members, phase=0.0):
        if config.mode != SCHEDULE:
            raise MacError("ScheduleCell requires a schedule-mode config")
        super().__init__(ctx, config, coordinator, members, phase)
        self._slot_of = {m: i + 1 for i, m in enumerate(self.members)}
        self._children: list[int] = []
        self._armed: set[int] = set()

    def attach_backbone_child(self, child: int) -> None:
        if child not in self._children:
            self._children.append(child)
            self._children.sort()

    def _listen_window(self) -> tuple[float, float]:
        start = 0.0 if self._children else self.config.t_slot_s
        return start, (len(self.members) + 1) * self.config.t_slot_s

    def _next_slot(self, node: int, t: float) -> float:
        if node in self._children:
            # children share slot 0 round-robin by cycle index
            stride = len(self._children)
            rank = self._children.index(node)
            return _next_occurrence(t, self.phase, self.t_dc, 0.0, stride, rank)
        offset = self._slot_of[node] * self.config.t_slot_s
        return _next_occurrence(t, self.phase, self.t_dc, offset)

    def enqueue(self, node: int, packet: Packet, policy: str = EVENT_APPEND) -> None:
        if node not in self._slot_of and node not in self._children:
            raise MacError(f"node {node} is not a member of this cell")
        now = self.ctx.sim.now
        if packet.first_opportunity is None:
            packet.first_opportunity = self._next_slot(node, now)
            packet.origin_t_dc = self.t_dc
        displaced = enqueue_status_packet(self._queue(node), packet, policy)
        self._notify_displaced(node, displaced, policy)
        self._arm(node, now)

    def _arm(self, node: int, t: float) -> None:
        if node in self._armed or not self.queues[node].pending:
            return
        when = self._next_slot(node, t)
        self._armed.add(node)
        self.ctx.sim.schedule(when, "slot-begin",
                              lambda n=node, w=when: self._slot_begin(n, w))

    def _slot_begin(self, node: int, slot_t: float) -> None:
        self._armed.discard(node)
        pkt = self.queues[node].head
        if pkt is None:
            return
        self.attempts += 1
        params = self.ctx.params
        b, d, u = params.beacon_airtime, params.data_airtime, params.turnaround_s
        coord = self.coordinator

        # fade-gated progression through beacon / grant / data / ack
        frames: dict[str, Frame] = {}
        frames["beacon"] = self._frame("beacon", node, coord,
                                       slot_t, slot_t + b, self._fade(node))
        fade_grant, fade_data, fade_ack = (self._fade(node) for _ in range(3))
        ack_window = None
        if self._decodes(frames["beacon"]):
            t0 = slot_t + b + u
            frames["grant"] = self._frame("grant", coord, node, t0, t0 + b, fade_grant)
            if self._decodes(frames["grant"]):
                t1 = t0 + b + u
                frames["data"] = self._frame("data", node, coord, t1, t1 + d, fade_data)
                ack_window = (t1 + d + u, t1 + d + u + b)
                if self._decodes(frames["data"]):
                    frames["ack"] = self._frame("ack", coord, node,
                                                ack_window[0], ack_window[1], fade_ack)

        self._book_member(node, frames, ack_window is not None)
        self._book_coordinator(frames)
        exch = _Exchange(member=node, packet=pkt, slot_begin=slot_t,
                         frames=frames, ack_window=ack_window)
        end = slot_t + 3 * b + 3 * u + d
        self.ctx.sim.schedule(end, "data-end", lambda e=exch: self._resolve(e))

    def _book_member(self, node: int, frames: dict[str, Frame], sent_data: bool):
        params = self.ctx.params
        b, u = params.beacon_airtime, params.turnaround_s
        led = self.ctx.ledgers[node]
        led.wake()
        led.accrue("tx", b)
        led.accrue("cs", u)
        grant = frames.get("grant")
        if grant is None or not self._decodes(grant):
            # waited out the grant window hearing nothing usable
            led.accrue("cs", b)
            led.sleep()
            return
        led.accrue("rx", b)
        led.accrue("cs", u)
        led.accrue("tx", params.data_airtime)
        led.accrue("cs", u)
        # the ack window is booked at resolve once the outcome is known

    def _book_coordinator(self, frames: dict[str, Frame]):
        params = self.ctx.params
        if "beacon" in frames and self._decodes(frames["beacon"]):
            self._coord_accrue("rx", params.beacon_airtime)
        if "grant" in frames:
            self._coord_accrue("tx", params.beacon_airtime)
        if "data" in frames and self._decodes(frames["data"]):
            self._coord_accrue("rx", params.data_airtime)

    def _resolve(self, exch: _Exchange) -> None:
        node, pkt = exch.member, exch.packet
        q = self.queues[node]
        params, reg = self.ctx.params, self.ctx.registry
        led = self.ctx.ledgers[node]
        if q.head is not pkt:  # replaced mid-attempt by a fresher report
            if exch.ack_window is not None:
                led.accrue("cs", params.beacon_airtime)
                led.sleep()
            self._arm(node, self.ctx.sim.now)
            return

        outcomes = {k: reg.resolve(f) for k, f in exch.frames.items()}
        data_delivered = all(outcomes.get(k) == DELIVERED
                             for k in ("beacon", "grant", "data"))
        if data_delivered:
            self.ctx.sink.data_received(node, pkt, exch.frames["data"].end)
            self._coord_accrue("tx", params.beacon_airtime)  # the ack
        success = data_delivered and outcomes.get("ack") == DELIVERED
        if exch.ack_window is not None:
            led.accrue("rx" if success else "cs", params.beacon_airtime)
            led.sleep()

        if success:
            q.pending.popleft()
            self._count_ack(node, pkt)
        else:
            pkt.retries_used += 1
            if pkt.retries_used > self.config.max_retries:
                q.pending.popleft()
                self._count_drop(node, pkt)
        self._arm(node, exch.slot_begin + self.t_dc - _EPS)


class ContentionCell(_CellBase):
    """One shared slot per cycle, contended with randomized backoff.

    Every node with a pending report wakes at the slot start and draws a
    backoff; the earliest beacon claims the slot and the rest sleep as
    soon as they hear it. Equal draws collide unless capture separates
    them. Collision or loss doubles the per-node window up to cw_max;
    success (or giving up on a packet) resets it.
    """

    def __init__(self, ctx, config, coordinator, members, phase=0.0):
        if config.mode != CONTENTION:
            raise MacError("ContentionCell requires a contention-mode config")
        super().__init__(ctx, config, coordinator, members, phase)
        self.cw: dict[int, int] = {}
        self.slots_contended = 0
        self._cycle_armed = False

    def _listen_window(self) -> tuple[float, float]:
        return 0.0, self.config.t_slot_s

    def _next_cycle(self, t: float) -> float:
        return _next_occurrence(t, self.phase, self.t_dc, 0.0)

    def enqueue(self, node: int, packet: Packet, policy: str = EVENT_APPEND) -> None:
        now = self.ctx.sim.now
        if packet.first_opportunity is None:
            packet.first_opportunity = self._next_cycle(now)
            packet.origin_t_dc = self.t_dc
        displaced = enqueue_status_packet(self._queue(node), packet, policy)
        self._notify_displaced(node, displaced, policy)
        self._arm(now)

    def _arm(self, t: float) -> None:
        if self._cycle_armed:
            return
        self._cycle_armed = True
        when = self._next_cycle(t)
        self.ctx.sim.schedule(when, "slot-begin", lambda w=when: self._slot_begin(w))

    def _slot_begin(self, slot_t: float) -> None:
        self._cycle_armed = False
        contenders = [n for n in sorted(self.queues) if self.queues[n].pending]
        if not contenders:
            return
        self.slots_contended += 1
        params = self.ctx.params
        b, d, u = params.beacon_airtime, params.data_airtime, params.turnaround_s
        draws = {n: contention_draw(self.cw.get(n, self.config.cw_min),
                                    self.ctx.hub.stream(n, "backoff"))
                 for n in contenders}
        best = min(draws.values())
        winners = [n for n in contenders if draws[n] == best]
        wait = best * self.config.micro_slot_s

        loser_cs = wait + b  # carrier-sense until the winning beacon ends
        for n in contenders:
            if draws[n] > best:
                led = self.ctx.ledgers[n]
                led.wake()
                led.accrue("cs", loser_cs)
                led.sleep()

        exchanges = []
        for n in winners:
            self.attempts += 1
            t0 = slot_t + wait
            frames = {
                # beacons matter here as energy on the channel, not as content
                "beacon": self._frame("beacon", n, self.coordinator, t0, t0 + b, 0.0),
                "data": self._frame("data", n, self.coordinator,
                                    t0 + b + u, t0 + b + u + d, self._fade(n)),
            }
            led = self.ctx.ledgers[n]
            led.wake()
            led.accrue("cs", wait)
            led.accrue("tx", b)
            led.accrue("cs", u)
            led.accrue("tx", d)
            led.accrue("cs", u)
            ack_start = frames["data"].end + u
            exchanges.append(_Exchange(
                member=n, packet=self.queues[n].head, slot_begin=slot_t,
                frames=frames, ack_window=(ack_start, ack_start + b),
                ack_fade_db=self._fade(n)))
        self._coord_accrue("rx", b + d)
        end = max(e.ack_window[1] for e in exchanges)
        self.ctx.sim.schedule(end, "data-end", lambda ex=exchanges: self._resolve(ex))

    def _resolve(self, exchanges: list[_Exchange]) -> None:
        params, reg = self.ctx.params, self.ctx.registry
        b = params.beacon_airtime
        # capture admits at most one of a set of fully overlapped data frames
        survivor = None
        outcomes = {}
        for exch in exchanges:
            outcomes[exch.member] = reg.resolve(exch.frames["data"])
            if outcomes[exch.member] == DELIVERED:
                survivor = exch
        for exch in exchanges:
            node, pkt = exch.member, exch.packet
            led = self.ctx.ledgers[node]
            q = self.queues[node]
            if q.head is not pkt:  # replaced mid-attempt
                led.accrue("cs", b)
                led.sleep()
                continue
            success = False
            if exch is survivor:
                self.ctx.sink.data_received(node, pkt, exch.frames["data"].end)
                ack = self._frame("ack", self.coordinator, node,
                                  exch.ack_window[0], exch.ack_window[1],
                                  exch.ack_fade_db)
                self._coord_accrue("tx", b)
                success = reg.resolve(ack) == DELIVERED
            led.accrue("rx" if success else "cs", b)
            led.sleep()
            self.cw[node] = backoff_window_update(
                self.cw.get(node, self.config.cw_min), success, self.config)
            if success:
                q.pending.popleft()
                self._count_ack(node, pkt)
            else:
                pkt.retries_used += 1
                if pkt.retries_used > self.config.max_retries:
                    q.pending.popleft()
                    self._count_drop(node, pkt)
                    self.cw[node] = self.config.cw_min
        if any(q.pending for q in self.queues.values()):
            self._arm(exchanges[0].slot_begin + self.t_dc - _EPS)
