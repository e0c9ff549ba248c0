"""Delay, delivery-probability and energy measurement, with the
closed-form delay estimators and planning thresholds used to interpret
runs."""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np

from .mac import Packet
from .radio import EnergyLedger


@dataclass
class DelaySample:
    sensor: int
    status_changed_at: float
    known_at: float
    delay_s: float
    cycles_waited: int
    censored: bool = False


class DelayCollector:
    """Tracks when the gateway first learns of each occupancy change.

    A delivered packet closes every still-pending change of its sensor
    with an instant not later than the packet's own change timestamp:
    the gateway has learned the sensor moved on, even if intermediate
    states were skipped. With strict=True skipped states are counted as
    missed instead and produce no delay sample.
    """

    def __init__(self, strict: bool = False):
        self.strict = strict
        self.samples: list[DelaySample] = []
        self.cycle_counts: Counter[int] = Counter()
        self.delivered = 0
        self.dropped = 0
        self.missed = 0
        self._pending: dict[int, deque[float]] = {}
        self._seen: set[tuple[int, int]] = set()

    def record_change(self, sensor: int, t: float) -> None:
        self._pending.setdefault(sensor, deque()).append(t)

    def record_gateway_data(self, packet: Packet, t_known: float) -> None:
        """First arrival of a packet at the gateway; duplicates ignored."""
        key = (packet.source, packet.seq)
        if key in self._seen:
            return
        self._seen.add(key)
        self.delivered += 1
        k = cycles_waited(packet, t_known)
        self.cycle_counts[k] += 1
        pending = self._pending.get(packet.source)
        if not pending:
            return
        cutoff = packet.status_changed_at + 1e-9
        while pending and pending[0] <= cutoff:
            t_change = pending.popleft()
            if self.strict and t_change < packet.status_changed_at - 1e-9:
                self.missed += 1
                continue
            self.samples.append(DelaySample(
                sensor=packet.source, status_changed_at=t_change,
                known_at=t_known, delay_s=t_known - t_change,
                cycles_waited=k))

    def record_drop(self, packet: Packet) -> None:
        self.dropped += 1

    def finalize(self, t_end: float) -> None:
        """Changes never delivered by run end become censored samples."""
        for sensor in sorted(self._pending):
            for t_change in self._pending[sensor]:
                self.samples.append(DelaySample(
                    sensor=sensor, status_changed_at=t_change, known_at=t_end,
                    delay_s=t_end - t_change, cycles_waited=0, censored=True))
            self._pending[sensor].clear()

    def mean_delay(self) -> float:
        vals = [s.delay_s for s in self.samples if not s.censored]
        return float(np.mean(vals)) if vals else math.nan


def cycles_waited(packet: Packet, t_known: float) -> int:
    """Duty cycles between a packet's first transmit opportunity and its
    delivery; 1 means it went through at the first opportunity."""
    if packet.first_opportunity is None or not packet.origin_t_dc:
        return 0
    span = t_known - packet.first_opportunity
    return max(1, math.floor(span / packet.origin_t_dc + 1e-9) + 1)


def estimate_cycle_probabilities(counts: dict[int, int] | Counter,
                                 attempts: int) -> list[float]:
    """Conditional per-cycle delivery probabilities from a histogram.

    p[0] is the chance of delivery in the first cycle; p[i] conditions
    on having survived the earlier ones.
    """
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    horizon = max(counts) if counts else 0
    probs = []
    remaining = attempts
    for k in range(1, horizon + 1):
        c = counts.get(k, 0)
        probs.append(c / remaining if remaining > 0 else 0.0)
        remaining -= c
    return probs


def delay_from_cycle_probabilities(probs: list[float], t_dc: float) -> float:
    """Expected delay implied by the per-cycle delivery chain.

    Weights each cycle index by the probability of first arrival there,
    renormalized over deliveries so drops and unfinished packets do not
    dilute the mean.
    """
    mass = 0.0
    acc = 0.0
    survive = 1.0
    for i, p in enumerate(probs, start=1):
        f = survive * p
        acc += f * (i - 0.5) * t_dc
        mass += f
        survive *= 1.0 - p
    return acc / mass if mass > 0 else math.nan


def analytic_delay_schedule(p1: float, t_dc: float) -> float:
    """Mean delay with one private slot per cycle and per-cycle success p1."""
    if p1 <= 0:
        raise ValueError("p1 must be positive")
    return t_dc * (1.0 / p1 - 0.5)


def analytic_delay_contention(p1: float, p2: float, t_dc: float) -> float:
    """Mean delay for the contended slot, first and later cycles separated."""
    if p1 <= 0 or p2 <= 0:
        raise ValueError("probabilities must be positive")
    return t_dc * ((1.0 - p1) / p2 + 0.5)


def analytic_delay_periodic(report_interval_s: float, p1: float, p2: float,
                            t_dc: float) -> float:
    """Application-layer sampling wait plus the contended-slot delay."""
    if report_interval_s < 0:
        raise ValueError("report interval must be non-negative")
    return report_interval_s / 2.0 + analytic_delay_contention(p1, p2, t_dc)


@dataclass(frozen=True)
class InsightThresholds:
    t_slot_max_s: float
    max_competitors: float
    schedule_recommended: bool


def insight_thresholds(n_sensors: int, mean_occupied_s: float, mean_vacant_s: float,
                       t_slot_s: float, report_interval_s: float | None = None,
                       ) -> InsightThresholds:
    """Planning rules of thumb for dimensioning a cell.

    t_slot_max is the largest slot keeping one private slot per sensor
    per expected status change. max_competitors is how many nodes can
    race for the shared slot before a periodic report misses its
    interval. schedule_recommended compares the sensor count against 0.3
    of the mean half-cycle; the operands are a count and a duration read
    as plain numbers, applied here in that stated form.
    """
    if n_sensors < 1 or mean_occupied_s <= 0 or mean_vacant_s <= 0 or t_slot_s <= 0:
        raise ValueError("parameters must be positive")
    half_cycle = 0.5 * mean_occupied_s + 0.5 * mean_vacant_s
    t_slot_max = half_cycle / n_sensors
    if report_interval_s is not None:
        raw = report_interval_s / t_slot_s - 1.0
        snapped = round(raw)
        max_competitors = float(snapped) if abs(raw - snapped) < 1e-6 else raw
    else:
        max_competitors = math.inf
    return InsightThresholds(
        t_slot_max_s=t_slot_max,
        max_competitors=max_competitors,
        schedule_recommended=n_sensors > 0.3 * half_cycle)


@dataclass
class EnergyReport:
    """Mean and spread of per-node consumption, split by role."""
    sensor_mean_j: float
    sensor_std_j: float
    sensor_joules: dict[int, float] = field(default_factory=dict)
    other_joules: dict[int, float] = field(default_factory=dict)


def energy_report(ledgers: dict[int, EnergyLedger],
                  sensor_ids: list[int]) -> EnergyReport:
    sensors = {i: ledgers[i].joules for i in sensor_ids}
    others = {i: led.joules for i, led in ledgers.items() if i not in sensors}
    vals = np.array(list(sensors.values()), dtype=float)
    std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
    return EnergyReport(
        sensor_mean_j=float(vals.mean()) if len(vals) else math.nan,
        sensor_std_j=std,
        sensor_joules=sensors,
        other_joules=others)
